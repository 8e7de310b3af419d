//! Time-shift augmentation.

use super::{LabeledEvent, SplitRole};
use crate::error::{PipeError, Result};
use crate::kinematics::{Label, LabelSource, LabelValue, ProcessedWindow};

/// Which classes get augmented copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentClasses {
    Both,
    TrueOnly,
    FalseOnly,
}

impl AugmentClasses {
    pub fn includes(&self, value: LabelValue) -> bool {
        match self {
            AugmentClasses::Both => true,
            AugmentClasses::TrueOnly => value == LabelValue::TrueImpact,
            AugmentClasses::FalseOnly => value == LabelValue::NonContact,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AugmentClasses::Both => "both",
            AugmentClasses::TrueOnly => "true_only",
            AugmentClasses::FalseOnly => "false_only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(AugmentClasses::Both),
            "true_only" => Ok(AugmentClasses::TrueOnly),
            "false_only" => Ok(AugmentClasses::FalseOnly),
            other => Err(PipeError::InvalidParameter(format!(
                "unknown augment_classes '{other}' (expected both|true_only|false_only)"
            ))),
        }
    }
}

/// Shifts every row right by `shift_ms` columns, zero-filling the vacated
/// leading columns; the window length is unchanged. The shift must lie in
/// [1, max_shift_ms] (a zero shift is allowed only when the configured
/// maximum is relaxed to 0, where it degenerates to the identity).
pub fn augment_shift(
    window: &ProcessedWindow,
    shift_ms: usize,
    max_shift_ms: usize,
) -> Result<ProcessedWindow> {
    let min_shift = if max_shift_ms == 0 { 0 } else { 1 };
    if shift_ms < min_shift || shift_ms > max_shift_ms.max(min_shift) {
        return Err(PipeError::InvalidParameter(format!(
            "shift of {shift_ms} ms outside allowed range [{min_shift}, {max_shift_ms}]"
        )));
    }
    if shift_ms >= window.n_cols() {
        return Err(PipeError::InvalidParameter(format!(
            "shift of {shift_ms} ms does not fit a {} column window",
            window.n_cols()
        )));
    }
    let mut out = window.clone();
    for row in out.data.iter_mut() {
        row.rotate_right(shift_ms);
        for v in row.iter_mut().take(shift_ms) {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Expands a training set: every original in the selected classes yields
/// itself plus one shifted copy per whole millisecond in [1, shifts].
/// Rejects any event tagged as test data.
pub fn expand_training_set(
    events: &[LabeledEvent],
    shifts: usize,
    classes: AugmentClasses,
) -> Result<Vec<LabeledEvent>> {
    for e in events {
        if e.split_role == SplitRole::Test {
            return Err(PipeError::Contamination(format!(
                "test-split event '{}' passed to training-set expansion",
                e.event_id
            )));
        }
    }
    let mut out = Vec::with_capacity(events.len() * (shifts + 1));
    for e in events {
        out.push(e.clone());
        if !classes.includes(e.label.value) {
            continue;
        }
        for k in 1..=shifts {
            let window = augment_shift(&e.window, k, shifts)?;
            out.push(LabeledEvent {
                event_id: format!("{}-aug{}", e.event_id, k),
                window,
                label: Label {
                    value: e.label.value,
                    source: LabelSource::Augmented {
                        parent_id: e.event_id.clone(),
                    },
                },
                split_role: e.split_role,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Unit;

    fn toy_window() -> ProcessedWindow {
        let mut data = vec![vec![0.0; 200]; 6];
        data[0][50] = 1.0;
        ProcessedWindow {
            data,
            trigger_col: 50,
            channel_units: [Unit::G; 6],
            normalized: true,
        }
    }

    fn toy_event(id: &str, value: LabelValue, role: SplitRole) -> LabeledEvent {
        LabeledEvent {
            event_id: id.into(),
            window: toy_window(),
            label: Label::synthetic(value),
            split_role: role,
        }
    }

    #[test]
    fn shift_moves_content_right() {
        let w = toy_window();
        let shifted = augment_shift(&w, 3, 5).unwrap();
        assert_eq!(shifted.data[0][53], 1.0);
        assert_eq!(shifted.data[0][50], 0.0);
        assert_eq!(shifted.n_cols(), 200);
    }

    #[test]
    fn shift_five_zeroes_leading_columns() {
        let mut w = toy_window();
        for row in w.data.iter_mut() {
            for v in row.iter_mut() {
                *v = 0.25;
            }
        }
        let shifted = augment_shift(&w, 5, 5).unwrap();
        for row in &shifted.data {
            assert!(row[..5].iter().all(|v| *v == 0.0));
            assert!(row[5..].iter().all(|v| *v == 0.25));
        }
    }

    #[test]
    fn zero_shift_requires_relaxed_config() {
        let w = toy_window();
        assert!(matches!(
            augment_shift(&w, 0, 5),
            Err(PipeError::InvalidParameter(_))
        ));
        let identity = augment_shift(&w, 0, 0).unwrap();
        assert_eq!(identity, w);
    }

    #[test]
    fn out_of_range_shift_rejected() {
        let w = toy_window();
        assert!(matches!(
            augment_shift(&w, 6, 5),
            Err(PipeError::InvalidParameter(_))
        ));
    }

    #[test]
    fn expansion_is_six_fold_with_parent_links() {
        let events = vec![
            toy_event("e0", LabelValue::TrueImpact, SplitRole::Train),
            toy_event("e1", LabelValue::NonContact, SplitRole::Train),
        ];
        let out = expand_training_set(&events, 5, AugmentClasses::Both).unwrap();
        assert_eq!(out.len(), 12);
        let augmented: Vec<&LabeledEvent> = out
            .iter()
            .filter(|e| matches!(e.label.source, LabelSource::Augmented { .. }))
            .collect();
        assert_eq!(augmented.len(), 10);
        for a in augmented {
            match &a.label.source {
                LabelSource::Augmented { parent_id } => {
                    assert!(events.iter().any(|e| &e.event_id == parent_id))
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let out = expand_training_set(&[], 5, AugmentClasses::Both).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn single_event_yields_six_with_five_augmented() {
        let events = vec![toy_event("solo", LabelValue::TrueImpact, SplitRole::Unassigned)];
        let out = expand_training_set(&events, 5, AugmentClasses::Both).unwrap();
        assert_eq!(out.len(), 6);
        let n_aug = out
            .iter()
            .filter(|e| matches!(e.label.source, LabelSource::Augmented { .. }))
            .count();
        assert_eq!(n_aug, 5);
    }

    #[test]
    fn test_split_event_triggers_contamination_error() {
        let events = vec![toy_event("t0", LabelValue::TrueImpact, SplitRole::Test)];
        assert!(matches!(
            expand_training_set(&events, 5, AugmentClasses::Both),
            Err(PipeError::Contamination(_))
        ));
    }

    #[test]
    fn class_selection_limits_expansion() {
        let events = vec![
            toy_event("e0", LabelValue::TrueImpact, SplitRole::Train),
            toy_event("e1", LabelValue::NonContact, SplitRole::Train),
        ];
        let out = expand_training_set(&events, 5, AugmentClasses::TrueOnly).unwrap();
        assert_eq!(out.len(), 7); // 6 for the impact + 1 untouched artifact
    }
}
