//! Event-file parsing and writing, label joins, augmentation,
//! class weighting, split construction, and export packaging.

mod augment;
mod event_file;
mod export;
mod manifest;
mod split;
mod weights;

pub use augment::{augment_shift, expand_training_set, AugmentClasses};
pub use event_file::{
    fmt_num, fmt_sig9, parse_event_file, parse_event_str, write_event_file, write_event_string,
};
pub use export::{export_package, ExportItem};
pub use manifest::{parse_manifest, write_manifest, ManifestRow, MANIFEST_HEADER};
pub use split::{apply_split, make_split, SplitRequest};
pub use weights::class_weights;

use crate::error::{PipeError, Result};
use crate::kinematics::{
    build_window, normalize, KinematicEvent, Label, ProcessedWindow, ProcessingConfig,
};
use std::collections::BTreeSet;

/// Which side of the split an event sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRole {
    Unassigned,
    Train,
    Test,
}

/// A processed window with its ground truth and split bookkeeping — the
/// unit the classifiers consume.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEvent {
    pub event_id: String,
    pub window: ProcessedWindow,
    pub label: Label,
    pub split_role: SplitRole,
}

/// Train/test id partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
    pub augment_train: bool,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(id) = self.train_ids.intersection(&self.test_ids).next() {
            return Err(PipeError::InvalidParameter(format!(
                "event '{id}' appears in both train and test sets"
            )));
        }
        Ok(())
    }
}

/// Per-class loss multipliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub w_true: f64,
    pub w_false: f64,
}

impl ClassWeights {
    pub fn uniform() -> Self {
        ClassWeights {
            w_true: 1.0,
            w_false: 1.0,
        }
    }
}

/// Builds normalized windows for a batch of labeled raw events.
pub fn prepare_labeled(
    pairs: &[(KinematicEvent, Label)],
    pcfg: &ProcessingConfig,
) -> Result<Vec<LabeledEvent>> {
    pairs
        .iter()
        .map(|(event, label)| {
            let window = normalize(build_window(event, pcfg)?, pcfg)?;
            Ok(LabeledEvent {
                event_id: event.event_id.clone(),
                window,
                label: label.clone(),
                split_role: SplitRole::Unassigned,
            })
        })
        .collect()
}
