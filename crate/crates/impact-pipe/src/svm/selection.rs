//! Sequential forward feature selection under k-fold cross-validation.

use super::features::Standardizer;
use super::smo::{predict_svm, train_svm, Kernel};
use super::pick;
use crate::error::{PipeError, Result};
use crate::kinematics::LabelValue;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One evaluated addition in the greedy trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionStep {
    pub feature: usize,
    pub cv_error: f64,
    pub accepted: bool,
}

/// Greedy forward selection: starting from the empty set, repeatedly add
/// the feature whose candidate set minimizes stratified k-fold CV
/// misclassification, stopping at the first non-improving step or at
/// `max_features`. Fold assignment is deterministic in the seed; ties
/// resolve to the lowest feature index.
pub fn sequential_forward_selection(
    rows: &[Vec<f64>],
    signs: &[f64],
    k_folds: usize,
    max_features: usize,
    kernel: Kernel,
    c: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<SelectionStep>)> {
    if max_features == 0 {
        return Err(PipeError::InvalidParameter(
            "max_features must be at least 1".into(),
        ));
    }
    if k_folds < 2 {
        return Err(PipeError::InvalidParameter(
            "selection needs at least 2 folds".into(),
        ));
    }
    if rows.is_empty() || rows.len() != signs.len() {
        return Err(PipeError::InvalidParameter(format!(
            "selection table has {} rows but {} labels",
            rows.len(),
            signs.len()
        )));
    }
    let d = rows[0].len();
    let n_pos = signs.iter().filter(|s| **s > 0.0).count();
    let n_neg = signs.len() - n_pos;
    if n_pos < k_folds || n_neg < k_folds {
        return Err(PipeError::InvalidParameter(format!(
            "stratified {k_folds}-fold CV needs {k_folds} events per class, got {n_pos}/{n_neg}"
        )));
    }

    let folds = stratified_folds(signs, k_folds, seed);

    let cv_error = |mask: &[usize]| -> Result<f64> {
        let mut errors = 0usize;
        for fold in 0..k_folds {
            let mut train_x = Vec::new();
            let mut train_y = Vec::new();
            let mut val_idx = Vec::new();
            for (i, &f) in folds.iter().enumerate() {
                if f == fold {
                    val_idx.push(i);
                } else {
                    train_x.push(pick(&rows[i], mask));
                    train_y.push(signs[i]);
                }
            }
            // Standardization is re-fit inside each fold's training split
            // so validation data never leaks into the statistics.
            let st = Standardizer::fit(&train_x)?;
            let train_x: Vec<Vec<f64>> = train_x.iter().map(|r| st.apply(r)).collect();
            let model = train_svm(&train_x, &train_y, kernel, c)?;
            for &i in &val_idx {
                let x = st.apply(&pick(&rows[i], mask));
                let (label, _) = predict_svm(&model, &x)?;
                let truth = if signs[i] > 0.0 {
                    LabelValue::TrueImpact
                } else {
                    LabelValue::NonContact
                };
                if label != truth {
                    errors += 1;
                }
            }
        }
        Ok(errors as f64 / rows.len() as f64)
    };

    let mut mask: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut current_error = f64::INFINITY;
    while mask.len() < max_features.min(d) {
        let mut best: Option<(usize, f64)> = None;
        for feature in 0..d {
            if mask.contains(&feature) {
                continue;
            }
            let mut candidate = mask.clone();
            candidate.push(feature);
            let err = cv_error(&candidate)?;
            let better = match best {
                None => true,
                Some((_, b)) => err < b,
            };
            if better {
                best = Some((feature, err));
            }
        }
        let Some((feature, err)) = best else { break };
        if err < current_error {
            mask.push(feature);
            current_error = err;
            trace.push(SelectionStep {
                feature,
                cv_error: err,
                accepted: true,
            });
            if err == 0.0 {
                break;
            }
        } else {
            trace.push(SelectionStep {
                feature,
                cv_error: err,
                accepted: false,
            });
            break;
        }
    }
    Ok((mask, trace))
}

/// Per-class round-robin fold assignment after a seeded shuffle.
fn stratified_folds(signs: &[f64], k_folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0usize; signs.len()];
    for class_positive in [true, false] {
        let mut idx: Vec<usize> = signs
            .iter()
            .enumerate()
            .filter(|(_, s)| (**s > 0.0) == class_positive)
            .map(|(i, _)| i)
            .collect();
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            folds[i] = pos % k_folds;
        }
    }
    folds
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Table where only column `informative` separates the classes.
    fn single_informative_table(
        n_per_class: usize,
        d: usize,
        informative: usize,
        seed: u64,
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut signs = Vec::new();
        for class in [1.0f64, -1.0] {
            for _ in 0..n_per_class {
                let mut row: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                row[informative] = class * rng.gen_range(1.0..2.0);
                rows.push(row);
                signs.push(class);
            }
        }
        (rows, signs)
    }

    #[test]
    fn perfectly_separating_feature_is_found_alone() {
        let (rows, signs) = single_informative_table(20, 6, 3, 7);
        let (mask, trace) =
            sequential_forward_selection(&rows, &signs, 5, 6, Kernel::Linear, 10.0, 1).unwrap();
        assert_eq!(mask, vec![3]);
        assert_eq!(trace.len(), 1);
        assert!(trace[0].accepted);
        assert_eq!(trace[0].cv_error, 0.0);
    }

    #[test]
    fn accepted_steps_strictly_decrease_cv_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Two weakly informative features and noise.
        let mut rows = Vec::new();
        let mut signs = Vec::new();
        for class in [1.0f64, -1.0] {
            for _ in 0..25 {
                let mut row: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
                row[1] += class * 0.8;
                row[6] += class * 0.8;
                rows.push(row);
                signs.push(class);
            }
        }
        let (_, trace) =
            sequential_forward_selection(&rows, &signs, 5, 8, Kernel::RbfAuto, 1.0, 11).unwrap();
        let accepted: Vec<f64> = trace
            .iter()
            .filter(|s| s.accepted)
            .map(|s| s.cv_error)
            .collect();
        for pair in accepted.windows(2) {
            assert!(pair[1] < pair[0], "non-decreasing accepted step: {accepted:?}");
        }
    }

    #[test]
    fn zero_max_features_is_rejected() {
        let (rows, signs) = single_informative_table(10, 3, 0, 1);
        assert!(matches!(
            sequential_forward_selection(&rows, &signs, 5, 0, Kernel::Linear, 1.0, 1),
            Err(PipeError::InvalidParameter(_))
        ));
    }

    #[test]
    fn too_few_events_per_class_for_folds_is_rejected() {
        let (rows, signs) = single_informative_table(3, 3, 0, 1);
        assert!(matches!(
            sequential_forward_selection(&rows, &signs, 5, 2, Kernel::Linear, 1.0, 1),
            Err(PipeError::InvalidParameter(_))
        ));
    }

    /// 10 columns, two weakly informative (each alone leaves CV errors, the
    /// pair averages the noise down), eight pure noise.
    pub(crate) fn two_informative_table(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut signs = Vec::new();
        for class in [1.0f64, -1.0] {
            for _ in 0..20 {
                let mut row: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
                row[2] += class * 0.6;
                row[7] -= class * 0.6;
                rows.push(row);
                signs.push(class);
            }
        }
        (rows, signs)
    }

    #[test]
    fn informative_pair_beats_noise_on_a_few_seeds() {
        let mut hits = 0;
        let seeds = [1u64, 2, 3, 4, 5];
        for &seed in &seeds {
            let (rows, signs) = two_informative_table(seed);
            let (mask, _) =
                sequential_forward_selection(&rows, &signs, 5, 3, Kernel::RbfAuto, 1.0, seed)
                    .unwrap();
            if mask.len() >= 2 && mask[..2].contains(&2) && mask[..2].contains(&7) {
                hits += 1;
            }
        }
        assert!(
            hits >= 4,
            "informative pair recovered in only {hits}/{} runs",
            seeds.len()
        );
    }
}
