//! Greedy architecture search over layer counts and the head type.
//!
//! One dimension is varied at a time — 1D conv depth, then 2D conv depth,
//! then the final-layer type — keeping the best candidate of each stage.
//! Candidates are scored by accuracy on a held-out validation slice of the
//! training set; the test set is never touched.

use super::{predict, train, Architecture, HeadKind, MiGNetModel, TrainConfig};
use crate::dataset::{make_split, LabeledEvent, SplitRequest, SplitRole};
use crate::error::{PipeError, Result};

/// Candidate lists for the greedy search, parsed from a key=value file.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub conv1d_counts: Vec<usize>,
    pub conv2d_counts: Vec<usize>,
    pub heads: Vec<HeadKind>,
    /// Filter/kernel progression the counts index into.
    pub conv1d_menu: Vec<(usize, usize)>,
    pub conv2d_menu: Vec<(usize, usize)>,
    /// Training epochs per candidate (full training length is rarely needed
    /// to rank architectures).
    pub epochs: usize,
    /// Fraction of the training set held out for candidate scoring.
    pub val_fraction: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            conv1d_counts: vec![1, 2, 3, 4],
            conv2d_counts: vec![1, 2],
            heads: vec![HeadKind::Gap, HeadKind::Flatten],
            conv1d_menu: vec![(16, 7), (32, 5), (32, 3), (32, 3)],
            conv2d_menu: vec![(32, 3), (32, 3)],
            epochs: 5,
            val_fraction: 0.2,
        }
    }
}

impl SweepConfig {
    /// Parses `key = value` lines; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipeError::InvalidParameter(format!("sweep config line {}: '{raw}'", i + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_counts = |v: &str| -> Result<Vec<usize>> {
                v.split(',')
                    .map(|s| {
                        s.trim().parse::<usize>().map_err(|_| {
                            PipeError::InvalidParameter(format!("bad count '{s}' for {key}"))
                        })
                    })
                    .collect()
            };
            match key {
                "conv1d_counts" => cfg.conv1d_counts = parse_counts(value)?,
                "conv2d_counts" => cfg.conv2d_counts = parse_counts(value)?,
                "heads" => {
                    cfg.heads = value
                        .split(',')
                        .map(|s| HeadKind::parse(s.trim()))
                        .collect::<Result<_>>()?
                }
                "conv1d_menu" => cfg.conv1d_menu = Architecture::parse_stage(value)?,
                "conv2d_menu" => cfg.conv2d_menu = Architecture::parse_stage(value)?,
                "epochs" => {
                    cfg.epochs = value.parse().map_err(|_| {
                        PipeError::InvalidParameter(format!("bad epochs '{value}'"))
                    })?
                }
                "val_fraction" => {
                    cfg.val_fraction = value.parse().map_err(|_| {
                        PipeError::InvalidParameter(format!("bad val_fraction '{value}'"))
                    })?
                }
                other => {
                    return Err(PipeError::InvalidParameter(format!(
                        "unknown sweep config key '{other}'"
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let max1 = self.conv1d_counts.iter().max().copied().unwrap_or(0);
        let max2 = self.conv2d_counts.iter().max().copied().unwrap_or(0);
        if max1 == 0 || max2 == 0 || self.heads.is_empty() {
            return Err(PipeError::InvalidParameter(
                "sweep needs at least one candidate per dimension".into(),
            ));
        }
        if self.conv1d_menu.len() < max1 || self.conv2d_menu.len() < max2 {
            return Err(PipeError::InvalidParameter(format!(
                "menu shorter than the largest layer count ({max1} 1D / {max2} 2D)"
            )));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(PipeError::InvalidParameter(
                "val_fraction must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn arch_for(&self, n1: usize, n2: usize, head: HeadKind) -> Architecture {
        Architecture {
            conv1d: self.conv1d_menu[..n1].to_vec(),
            conv2d: self.conv2d_menu[..n2].to_vec(),
            head,
        }
    }
}

/// One scored candidate in the greedy trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepStep {
    pub dimension: &'static str,
    pub arch: Architecture,
    pub val_accuracy: f64,
    pub kept: bool,
}

/// Runs the greedy search and returns the winning architecture with the
/// full trace. Deterministic in the seed.
pub fn run_sweep(
    train_set: &[LabeledEvent],
    sweep: &SweepConfig,
    base: &TrainConfig,
    seed: u64,
) -> Result<(Architecture, Vec<SweepStep>)> {
    sweep.validate()?;
    for e in train_set {
        if e.split_role == SplitRole::Test {
            return Err(PipeError::Contamination(format!(
                "test-split event '{}' passed to the architecture sweep",
                e.event_id
            )));
        }
    }

    // Hold out a validation slice from the candidate-training data.
    let mut pool: Vec<LabeledEvent> = train_set
        .iter()
        .cloned()
        .map(|mut e| {
            e.split_role = SplitRole::Unassigned;
            e
        })
        .collect();
    let val_split = make_split(&pool, &SplitRequest::Fraction(sweep.val_fraction), seed, false)?;
    let (mut fit_set, mut val_set) = (Vec::new(), Vec::new());
    for e in pool.drain(..) {
        if val_split.test_ids.contains(&e.event_id) {
            val_set.push(e);
        } else {
            fit_set.push(e);
        }
    }
    if fit_set.is_empty() || val_set.is_empty() {
        return Err(PipeError::InvalidParameter(
            "sweep needs both a fit slice and a validation slice".into(),
        ));
    }

    let n_cols = fit_set[0].window.n_cols();
    let score = |arch: &Architecture| -> Result<f64> {
        let cfg = TrainConfig {
            epochs: sweep.epochs,
            ..base.clone()
        };
        let model = MiGNetModel::init(arch, n_cols, seed)?;
        let (model, _) = train(model, &fit_set, &cfg)?;
        let mut correct = 0usize;
        for e in &val_set {
            let (label, _) = predict(&model, &e.window)?;
            if label == e.label.value {
                correct += 1;
            }
        }
        Ok(correct as f64 / val_set.len() as f64)
    };

    let mut trace = Vec::new();
    let mut best_n1 = sweep.conv1d_counts[0];
    let mut best_n2 = sweep.conv2d_counts[0];
    let mut best_head = sweep.heads[0];
    let mut best_acc = f64::NEG_INFINITY;

    for &n1 in &sweep.conv1d_counts {
        let arch = sweep.arch_for(n1, best_n2, best_head);
        let acc = score(&arch)?;
        let kept = acc > best_acc;
        if kept {
            best_acc = acc;
            best_n1 = n1;
        }
        trace.push(SweepStep {
            dimension: "conv1d_count",
            arch,
            val_accuracy: acc,
            kept,
        });
    }
    for &n2 in &sweep.conv2d_counts {
        let arch = sweep.arch_for(best_n1, n2, best_head);
        let acc = score(&arch)?;
        // First candidate of the dimension re-scores the incumbent; keep
        // strictly better ones only.
        let kept = acc > best_acc;
        if kept {
            best_acc = acc;
            best_n2 = n2;
        }
        trace.push(SweepStep {
            dimension: "conv2d_count",
            arch,
            val_accuracy: acc,
            kept,
        });
    }
    for &head in &sweep.heads {
        let arch = sweep.arch_for(best_n1, best_n2, head);
        let acc = score(&arch)?;
        let kept = acc > best_acc;
        if kept {
            best_acc = acc;
            best_head = head;
        }
        trace.push(SweepStep {
            dimension: "head",
            arch,
            val_accuracy: acc,
            kept,
        });
    }

    Ok((sweep.arch_for(best_n1, best_n2, best_head), trace))
}
