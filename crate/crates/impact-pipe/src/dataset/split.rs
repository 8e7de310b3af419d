//! Stratified train/test splitting.

use super::{LabeledEvent, SplitRole, SplitSpec};
use crate::error::{PipeError, Result};
use crate::kinematics::{LabelSource, LabelValue};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// How to choose the test set.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitRequest {
    /// Per-class fraction of events held out for the test set.
    Fraction(f64),
    /// Exact per-class test-set sizes.
    Counts { test_true: usize, test_false: usize },
    /// A fixed, externally chosen test-id set; everything else trains.
    ExplicitIds(BTreeSet<String>),
}

/// Builds a stratified split: events are grouped by class, shuffled with the
/// seeded generator, and the requested number per class is held out. The
/// result is deterministic in the seed. Augmented events never land in the
/// test set.
pub fn make_split(
    events: &[LabeledEvent],
    request: &SplitRequest,
    seed: u64,
    augment_train: bool,
) -> Result<SplitSpec> {
    let mut ids = BTreeSet::new();
    for e in events {
        if !ids.insert(e.event_id.clone()) {
            return Err(PipeError::InvalidParameter(format!(
                "duplicate event id '{}' in split input",
                e.event_id
            )));
        }
    }

    let test_ids: BTreeSet<String> = match request {
        SplitRequest::ExplicitIds(test) => {
            for id in test {
                if !ids.contains(id) {
                    return Err(PipeError::InvalidParameter(format!(
                        "explicit test id '{id}' not present in the event set"
                    )));
                }
            }
            test.clone()
        }
        SplitRequest::Fraction(f) => {
            if !(*f > 0.0 && *f < 1.0) {
                return Err(PipeError::InvalidParameter(format!(
                    "test fraction {f} must lie in (0, 1)"
                )));
            }
            let (n_true, n_false) = class_counts(events);
            let t = ((n_true as f64) * f).round() as usize;
            let fls = ((n_false as f64) * f).round() as usize;
            pick_stratified(events, t, fls, seed)?
        }
        SplitRequest::Counts {
            test_true,
            test_false,
        } => pick_stratified(events, *test_true, *test_false, seed)?,
    };

    for id in &test_ids {
        let e = events.iter().find(|e| &e.event_id == id).unwrap();
        if matches!(e.label.source, LabelSource::Augmented { .. }) {
            return Err(PipeError::Contamination(format!(
                "augmented event '{id}' cannot be a test event"
            )));
        }
    }

    let train_ids: BTreeSet<String> = ids.difference(&test_ids).cloned().collect();
    let spec = SplitSpec {
        train_ids,
        test_ids,
        augment_train,
    };
    spec.validate()?;
    Ok(spec)
}

fn class_counts(events: &[LabeledEvent]) -> (usize, usize) {
    let n_true = events
        .iter()
        .filter(|e| e.label.value == LabelValue::TrueImpact)
        .count();
    (n_true, events.len() - n_true)
}

fn pick_stratified(
    events: &[LabeledEvent],
    test_true: usize,
    test_false: usize,
    seed: u64,
) -> Result<BTreeSet<String>> {
    // Candidate pools exclude augmented events and are id-sorted before the
    // shuffle so the outcome depends only on (ids, seed).
    let mut pool_true: Vec<&str> = Vec::new();
    let mut pool_false: Vec<&str> = Vec::new();
    for e in events {
        if matches!(e.label.source, LabelSource::Augmented { .. }) {
            continue;
        }
        match e.label.value {
            LabelValue::TrueImpact => pool_true.push(&e.event_id),
            LabelValue::NonContact => pool_false.push(&e.event_id),
        }
    }
    pool_true.sort_unstable();
    pool_false.sort_unstable();
    if pool_true.len() < test_true || pool_false.len() < test_false {
        return Err(PipeError::InvalidParameter(format!(
            "requested test set of {test_true}/{test_false} exceeds available {}/{} events",
            pool_true.len(),
            pool_false.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool_true.shuffle(&mut rng);
    pool_false.shuffle(&mut rng);
    Ok(pool_true[..test_true]
        .iter()
        .chain(pool_false[..test_false].iter())
        .map(|s| s.to_string())
        .collect())
}

/// Tags every event with its side of the split. Every event must be listed
/// in the split, and test events must not be augmented.
pub fn apply_split(events: &mut [LabeledEvent], split: &SplitSpec) -> Result<()> {
    split.validate()?;
    for e in events.iter_mut() {
        let role = if split.test_ids.contains(&e.event_id) {
            SplitRole::Test
        } else if split.train_ids.contains(&e.event_id) {
            SplitRole::Train
        } else {
            return Err(PipeError::InvalidParameter(format!(
                "event '{}' is not listed in the split",
                e.event_id
            )));
        };
        if role == SplitRole::Test && matches!(e.label.source, LabelSource::Augmented { .. }) {
            return Err(PipeError::Contamination(format!(
                "augmented event '{}' assigned to the test set",
                e.event_id
            )));
        }
        e.split_role = role;
    }
    Ok(())
}
