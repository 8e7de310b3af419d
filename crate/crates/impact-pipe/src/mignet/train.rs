//! SGD-with-momentum training loop.

use super::{backward, forward, weighted_cross_entropy, Gradients, MiGNetModel};
use crate::dataset::{ClassWeights, LabeledEvent, SplitRole};
use crate::error::{PipeError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub class_weights: ClassWeights,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            momentum: 0.9,
            batch_size: 32,
            epochs: 20,
            class_weights: ClassWeights::uniform(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(PipeError::InvalidParameter(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(PipeError::InvalidParameter(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(PipeError::InvalidParameter("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Classic momentum update: v <- momentum*v - lr*g; theta <- theta + v.
pub fn sgd_step(
    model: &mut MiGNetModel,
    grads: &Gradients,
    velocity: &mut Gradients,
    cfg: &TrainConfig,
) {
    let step = |theta: &mut [f64], g: &[f64], v: &mut [f64]| {
        for i in 0..theta.len() {
            v[i] = cfg.momentum * v[i] - cfg.lr * g[i];
            theta[i] += v[i];
        }
    };
    for ((layer, g), v) in model
        .conv1d
        .iter_mut()
        .zip(grads.conv1d.iter())
        .zip(velocity.conv1d.iter_mut())
    {
        step(layer.w.as_mut_slice(), g.0.as_slice(), v.0.as_mut_slice());
        step(&mut layer.b, &g.1, &mut v.1);
    }
    for ((layer, g), v) in model
        .conv2d
        .iter_mut()
        .zip(grads.conv2d.iter())
        .zip(velocity.conv2d.iter_mut())
    {
        step(layer.w.as_mut_slice(), g.0.as_slice(), v.0.as_mut_slice());
        step(&mut layer.b, &g.1, &mut v.1);
    }
    step(
        model.dense.w.as_mut_slice(),
        grads.dense.0.as_slice(),
        velocity.dense.0.as_mut_slice(),
    );
    step(&mut model.dense.b, &grads.dense.1, &mut velocity.dense.1);
    model.bump_stamp();
}

/// Mean weighted loss over a set, without updating anything.
pub fn mean_weighted_loss(
    model: &MiGNetModel,
    set: &[LabeledEvent],
    weights: &ClassWeights,
) -> Result<f64> {
    if set.is_empty() {
        return Err(PipeError::InvalidParameter(
            "loss over an empty set is undefined".into(),
        ));
    }
    let losses: Vec<f64> = set
        .par_iter()
        .map(|e| {
            let (p, _) = forward(model, &e.window)?;
            Ok(weighted_cross_entropy(&p, e.label.value, weights))
        })
        .collect::<Result<Vec<f64>>>()?;
    // Sequential reduction in event order keeps the value independent of
    // the worker schedule.
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Trains for exactly `cfg.epochs` passes of shuffled mini-batches and
/// returns the model with the per-epoch mean weighted loss trace.
/// Deterministic in `cfg.seed`: shuffling comes from a dedicated generator
/// and per-example gradients are reduced in batch order regardless of how
/// many workers computed them. Rejects test-tagged events.
pub fn train(
    mut model: MiGNetModel,
    train_set: &[LabeledEvent],
    cfg: &TrainConfig,
) -> Result<(MiGNetModel, Vec<f64>)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(PipeError::InvalidParameter("training set is empty".into()));
    }
    for e in train_set {
        if e.split_role == SplitRole::Test {
            return Err(PipeError::Contamination(format!(
                "test-split event '{}' passed to training",
                e.event_id
            )));
        }
        if !e.window.normalized {
            return Err(PipeError::InvalidParameter(format!(
                "window of event '{}' is not normalized",
                e.event_id
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut velocity = Gradients::zeros_like(&model);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let per_example: Vec<(Gradients, f64)> = batch
                .par_iter()
                .map(|&idx| {
                    let e = &train_set[idx];
                    let (p, cache) = forward(&model, &e.window)?;
                    let loss = weighted_cross_entropy(&p, e.label.value, &cfg.class_weights);
                    let g = backward(&model, &cache, e.label.value, &cfg.class_weights)?;
                    Ok((g, loss))
                })
                .collect::<Result<Vec<_>>>()?;

            let mut batch_grad = Gradients::zeros_like(&model);
            let mut batch_loss = 0.0;
            for (g, l) in &per_example {
                batch_grad.add_assign(g);
                batch_loss += l;
            }
            let scale = 1.0 / per_example.len() as f64;
            batch_grad.scale(scale);
            epoch_loss_sum += batch_loss;

            sgd_step(&mut model, &batch_grad, &mut velocity, cfg);
        }
        if !model.all_finite() {
            return Err(PipeError::Solver(
                "training diverged: non-finite parameters".into(),
            ));
        }
        trace.push(epoch_loss_sum / train_set.len() as f64);
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{Label, LabelValue, ProcessedWindow, Unit};
    use crate::mignet::tests::{mini_arch, toy_window};
    use crate::mignet::{backward, forward, Architecture};

    fn toy_event(id: &str, seed: u64, value: LabelValue) -> LabeledEvent {
        LabeledEvent {
            event_id: id.into(),
            window: toy_window(20, seed),
            label: Label::synthetic(value),
            split_role: SplitRole::Train,
        }
    }

    #[test]
    fn zero_gradient_leaves_model_unchanged() {
        let mut model = MiGNetModel::init(&mini_arch(), 20, 1).unwrap();
        let reference = model.clone();
        let zeros = Gradients::zeros_like(&model);
        let mut velocity = Gradients::zeros_like(&model);
        sgd_step(&mut model, &zeros, &mut velocity, &TrainConfig::default());
        assert_eq!(model.conv1d, reference.conv1d);
        assert_eq!(model.conv2d, reference.conv2d);
        assert_eq!(model.dense, reference.dense);
    }

    #[test]
    fn first_step_is_plain_gradient_descent() {
        let model = MiGNetModel::init(&mini_arch(), 20, 2).unwrap();
        let w = toy_window(20, 3);
        let (_, cache) = forward(&model, &w).unwrap();
        let g = backward(
            &model,
            &cache,
            LabelValue::TrueImpact,
            &ClassWeights::uniform(),
        )
        .unwrap();
        let cfg = TrainConfig::default();
        let mut stepped = model.clone();
        let mut velocity = Gradients::zeros_like(&model);
        sgd_step(&mut stepped, &g, &mut velocity, &cfg);
        for (i, (before, after)) in model
            .dense
            .w
            .as_slice()
            .iter()
            .zip(stepped.dense.w.as_slice())
            .enumerate()
        {
            let expect = before - cfg.lr * g.dense.0.as_slice()[i];
            assert!((after - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn two_steps_of_constant_gradient_unroll_the_recurrence() {
        // v1 = -lr g; theta1 = theta0 - lr g
        // v2 = -mu lr g - lr g; theta2 = theta0 - lr g (2 + mu)
        let model = MiGNetModel::init(&mini_arch(), 20, 4).unwrap();
        let w = toy_window(20, 5);
        let (_, cache) = forward(&model, &w).unwrap();
        let g = backward(
            &model,
            &cache,
            LabelValue::NonContact,
            &ClassWeights::uniform(),
        )
        .unwrap();
        let cfg = TrainConfig::default();
        let mut stepped = model.clone();
        let mut velocity = Gradients::zeros_like(&model);
        sgd_step(&mut stepped, &g, &mut velocity, &cfg);
        sgd_step(&mut stepped, &g, &mut velocity, &cfg);
        let factor = cfg.lr * (2.0 + cfg.momentum);
        for (i, (before, after)) in model
            .dense
            .w
            .as_slice()
            .iter()
            .zip(stepped.dense.w.as_slice())
            .enumerate()
        {
            let expect = before - factor * g.dense.0.as_slice()[i];
            assert!(
                (after - expect).abs() < 1e-12,
                "param {i}: {after} vs {expect}"
            );
        }
    }

    #[test]
    fn tiny_set_single_batch_single_update() {
        let model = MiGNetModel::init(&mini_arch(), 20, 6).unwrap();
        let events = vec![
            toy_event("a", 1, LabelValue::TrueImpact),
            toy_event("b", 2, LabelValue::NonContact),
        ];
        let cfg = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        let (trained, trace) = train(model.clone(), &events, &cfg).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trained.stamp(), 1); // exactly one batch update
    }

    #[test]
    fn training_is_deterministic_in_seed() {
        let model = MiGNetModel::init(&mini_arch(), 20, 7).unwrap();
        let events: Vec<LabeledEvent> = (0..10)
            .map(|i| {
                toy_event(
                    &format!("e{i}"),
                    i,
                    if i % 2 == 0 {
                        LabelValue::TrueImpact
                    } else {
                        LabelValue::NonContact
                    },
                )
            })
            .collect();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            seed: 99,
            ..TrainConfig::default()
        };
        let (m1, t1) = train(model.clone(), &events, &cfg).unwrap();
        let (m2, t2) = train(model.clone(), &events, &cfg).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(m1.dense, m2.dense);
        assert_eq!(m1.conv1d, m2.conv1d);
    }

    #[test]
    fn contaminated_training_set_is_rejected() {
        let model = MiGNetModel::init(&mini_arch(), 20, 8).unwrap();
        let mut e = toy_event("t", 1, LabelValue::TrueImpact);
        e.split_role = SplitRole::Test;
        assert!(matches!(
            train(model, &[e], &TrainConfig::default()),
            Err(PipeError::Contamination(_))
        ));
    }

    #[test]
    fn batch_gradient_is_permutation_invariant() {
        // The mean gradient over a batch must not depend on event order;
        // tolerance covers floating-point reassociation only.
        let model = MiGNetModel::init(&mini_arch(), 20, 9).unwrap();
        let events: Vec<LabeledEvent> = (0..6)
            .map(|i| {
                toy_event(
                    &format!("e{i}"),
                    100 + i,
                    if i < 3 {
                        LabelValue::TrueImpact
                    } else {
                        LabelValue::NonContact
                    },
                )
            })
            .collect();
        let weights = ClassWeights::uniform();
        let batch_grad = |order: &[usize]| -> Gradients {
            let mut acc = Gradients::zeros_like(&model);
            for &i in order {
                let (_, cache) = forward(&model, &events[i].window).unwrap();
                let g = backward(&model, &cache, events[i].label.value, &weights).unwrap();
                acc.add_assign(&g);
            }
            acc.scale(1.0 / order.len() as f64);
            acc
        };
        let a = batch_grad(&[0, 1, 2, 3, 4, 5]);
        let b = batch_grad(&[5, 3, 1, 4, 0, 2]);
        let mut max_rel: f64 = 0.0;
        let flat = |g: &Gradients| -> Vec<f64> {
            let mut v = Vec::new();
            for (w, b) in g.conv1d.iter().chain(g.conv2d.iter()) {
                v.extend_from_slice(w.as_slice());
                v.extend_from_slice(b);
            }
            v.extend_from_slice(g.dense.0.as_slice());
            v.extend_from_slice(&g.dense.1);
            v
        };
        for (x, y) in flat(&a).iter().zip(flat(&b).iter()) {
            let denom = x.abs().max(y.abs()).max(1e-12);
            max_rel = max_rel.max((x - y).abs() / denom);
        }
        assert!(max_rel < 1e-12, "permutation changed gradient by {max_rel}");
    }

    #[test]
    fn weighted_loss_equals_duplication_expanded_loss() {
        // With weights from the inverse-frequency formula, the weighted mean
        // loss over {1 true, 2 false} equals the unweighted mean loss over
        // the duplication-balanced set {true x2, false, false}.
        let model = MiGNetModel::init(&mini_arch(), 20, 10).unwrap();
        let t = toy_event("t", 1, LabelValue::TrueImpact);
        let f1 = toy_event("f1", 2, LabelValue::NonContact);
        let f2 = toy_event("f2", 3, LabelValue::NonContact);
        let weights = crate::dataset::class_weights(1, 2).unwrap();
        let weighted = mean_weighted_loss(
            &model,
            &[t.clone(), f1.clone(), f2.clone()],
            &weights,
        )
        .unwrap();
        // Duplicating the minority class to parity (true x2 vs false x2)
        // gives (2Lt + Lf1 + Lf2)/4, and the weighted mean is
        // (1.5Lt + 0.75Lf1 + 0.75Lf2)/3 — the same number.
        let dup = vec![t.clone(), t, f1, f2];
        let unweighted = mean_weighted_loss(&model, &dup, &ClassWeights::uniform()).unwrap();
        assert!(
            (weighted - unweighted).abs() < 1e-12,
            "weighted {weighted} vs duplicated {unweighted}"
        );
    }

    #[test]
    fn loss_decreases_on_separable_toy_problem() {
        // Constant-sign windows per class: the net must drive the loss down.
        let mk = |value: LabelValue, level: f64, id: usize| -> LabeledEvent {
            let data = vec![vec![level; 20]; 6];
            LabeledEvent {
                event_id: format!("c{id}"),
                window: ProcessedWindow {
                    data,
                    trigger_col: 5,
                    channel_units: [Unit::G; 6],
                    normalized: true,
                },
                label: Label::synthetic(value),
                split_role: SplitRole::Train,
            }
        };
        let events: Vec<LabeledEvent> = (0..8)
            .map(|i| {
                if i % 2 == 0 {
                    mk(LabelValue::TrueImpact, 0.8, i)
                } else {
                    mk(LabelValue::NonContact, -0.6, i)
                }
            })
            .collect();
        let arch = Architecture {
            conv1d: vec![(4, 5), (4, 3)],
            conv2d: vec![(4, 3)],
            head: crate::mignet::HeadKind::Gap,
        };
        let model = MiGNetModel::init(&arch, 20, 21).unwrap();
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 8,
            seed: 5,
            ..TrainConfig::default()
        };
        let (_, trace) = train(model, &events, &cfg).unwrap();
        assert!(
            trace.last().unwrap() < &0.1,
            "final loss {} on separable toy set",
            trace.last().unwrap()
        );
        assert!(trace.last().unwrap() < &trace[0]);
    }
}
