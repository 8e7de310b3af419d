//! Class-weighted cross-entropy.

use super::class_index;
use crate::dataset::ClassWeights;
use crate::kinematics::LabelValue;
use std::sync::atomic::{AtomicU64, Ordering};

/// Probabilities below this are clamped before the log.
const CLAMP: f64 = 1e-12;

static CLAMP_WARNINGS: AtomicU64 = AtomicU64::new(0);

/// How many times a zero-probability label had to be clamped since process
/// start.
pub fn clamp_warning_count() -> u64 {
    CLAMP_WARNINGS.load(Ordering::Relaxed)
}

/// loss = -w(label) * log p(label). Batch losses are means of these.
pub fn weighted_cross_entropy(probs: &[f64], label: LabelValue, weights: &ClassWeights) -> f64 {
    let w = match label {
        LabelValue::TrueImpact => weights.w_true,
        LabelValue::NonContact => weights.w_false,
    };
    let mut p = probs[class_index(label)];
    if p < CLAMP {
        CLAMP_WARNINGS.fetch_add(1, Ordering::Relaxed);
        p = CLAMP;
    }
    -w * p.ln()
}
