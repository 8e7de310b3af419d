//! Engineered-feature SVM baseline: feature extraction from processed
//! windows, sequential forward feature selection with cross-validated
//! scoring, and a C-SVC trained by sequential minimal optimization.

mod features;
mod model_io;
mod selection;
mod smo;

pub use features::{
    extract_features, feature_names, FeatureVector, Standardizer, N_FEATURES,
};
pub use model_io::{load_svm, save_svm, svm_fingerprint};
pub use selection::{sequential_forward_selection, SelectionStep};
pub use smo::{predict_svm, train_svm, Kernel, SvmModel};

use crate::dataset::{LabeledEvent, SplitRole};
use crate::error::{PipeError, Result};
use crate::kinematics::LabelValue;

/// Label encoding used by the solver.
pub fn label_to_sign(value: LabelValue) -> f64 {
    match value {
        LabelValue::TrueImpact => 1.0,
        LabelValue::NonContact => -1.0,
    }
}

/// End-to-end baseline settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmTrainConfig {
    pub kernel: Kernel,
    pub c: f64,
    pub k_folds: usize,
    pub max_features: usize,
    pub seed: u64,
}

impl Default for SvmTrainConfig {
    fn default() -> Self {
        SvmTrainConfig {
            kernel: Kernel::RbfAuto,
            c: 1.0,
            k_folds: 5,
            max_features: N_FEATURES,
            seed: 0,
        }
    }
}

/// Full baseline classifier: selection mask, training-set standardization,
/// and the fitted SVM.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmClassifier {
    pub mask: Vec<usize>,
    pub standardizer: Standardizer,
    pub model: SvmModel,
    pub selection_trace: Vec<SelectionStep>,
    pub seed: u64,
}

/// Fits the whole baseline on training events: extract features, run
/// sequential forward selection under cross-validation, standardize on the
/// training set only, and train the final SVM on the selected columns.
pub fn fit_svm_classifier(
    train_set: &[LabeledEvent],
    cfg: &SvmTrainConfig,
) -> Result<SvmClassifier> {
    for e in train_set {
        if e.split_role == SplitRole::Test {
            return Err(PipeError::Contamination(format!(
                "test-split event '{}' passed to baseline training",
                e.event_id
            )));
        }
    }
    let table: Vec<FeatureVector> = train_set
        .iter()
        .map(|e| extract_features(&e.window))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = table.into_iter().map(|f| f.values).collect();
    let signs: Vec<f64> = train_set
        .iter()
        .map(|e| label_to_sign(e.label.value))
        .collect();

    let (mask, trace) = sequential_forward_selection(
        &rows,
        &signs,
        cfg.k_folds,
        cfg.max_features,
        cfg.kernel,
        cfg.c,
        cfg.seed,
    )?;

    let selected: Vec<Vec<f64>> = rows.iter().map(|r| pick(r, &mask)).collect();
    let standardizer = Standardizer::fit(&selected)?;
    let standardized: Vec<Vec<f64>> = selected.iter().map(|r| standardizer.apply(r)).collect();
    let model = train_svm(&standardized, &signs, cfg.kernel, cfg.c)?;
    Ok(SvmClassifier {
        mask,
        standardizer,
        model,
        selection_trace: trace,
        seed: cfg.seed,
    })
}

/// Applies the baseline to one window: (label, decision value).
pub fn classify_window(
    clf: &SvmClassifier,
    window: &crate::kinematics::ProcessedWindow,
) -> Result<(LabelValue, f64)> {
    let fv = extract_features(window)?;
    let x = clf.standardizer.apply(&pick(&fv.values, &clf.mask));
    predict_svm(&clf.model, &x)
}

pub(crate) fn pick(row: &[f64], mask: &[usize]) -> Vec<f64> {
    mask.iter().map(|&i| row[i]).collect()
}
