//! Confusion-matrix metrics, evaluation, and report files.

mod report;

pub use report::{parse_report, render_table, write_report};

use crate::dataset::{LabeledEvent, SplitRole};
use crate::error::{PipeError, Result};
use crate::kinematics::{LabelValue, ProcessedWindow};
use rayon::prelude::*;

/// Two-class counts: rows are truth, columns are prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    /// Impacts classified as impacts.
    pub true_pos: u64,
    /// Impacts classified as non-contacts.
    pub false_neg: u64,
    /// Non-contacts classified as impacts.
    pub false_pos: u64,
    /// Non-contacts classified as non-contacts.
    pub true_neg: u64,
}

impl ConfusionMatrix {
    pub fn zero() -> Self {
        ConfusionMatrix {
            true_pos: 0,
            false_neg: 0,
            false_pos: 0,
            true_neg: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_neg + self.false_pos + self.true_neg
    }

    pub fn record(&mut self, truth: LabelValue, predicted: LabelValue) {
        match (truth, predicted) {
            (LabelValue::TrueImpact, LabelValue::TrueImpact) => self.true_pos += 1,
            (LabelValue::TrueImpact, LabelValue::NonContact) => self.false_neg += 1,
            (LabelValue::NonContact, LabelValue::TrueImpact) => self.false_pos += 1,
            (LabelValue::NonContact, LabelValue::NonContact) => self.true_neg += 1,
        }
    }
}

/// The four performance numbers. A metric whose denominator is zero is
/// undefined, never coerced to 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
}

/// sensitivity = TP/(TP+FN), specificity = TN/(TN+FP),
/// accuracy = (TP+TN)/total, precision = TP/(TP+FP).
pub fn metrics(m: &ConfusionMatrix) -> MetricSet {
    let ratio = |num: u64, den: u64| -> Option<f64> {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    MetricSet {
        sensitivity: ratio(m.true_pos, m.true_pos + m.false_neg),
        specificity: ratio(m.true_neg, m.true_neg + m.false_pos),
        accuracy: ratio(m.true_pos + m.true_neg, m.total()),
        precision: ratio(m.true_pos, m.true_pos + m.false_pos),
    }
}

/// Anything that maps a processed window to (label, score).
pub trait Classifier: Sync {
    fn classify(&self, window: &ProcessedWindow) -> Result<(LabelValue, f64)>;
    fn model_id(&self) -> String;
    /// Whether a returned score sits exactly on the decision boundary.
    fn is_tie(&self, score: f64) -> bool;
}

impl Classifier for crate::mignet::MiGNetModel {
    fn classify(&self, window: &ProcessedWindow) -> Result<(LabelValue, f64)> {
        crate::mignet::predict(self, window)
    }

    fn model_id(&self) -> String {
        crate::mignet::model_fingerprint(self)
    }

    /// The score is p(impact); the softmax tie sits at one half.
    fn is_tie(&self, score: f64) -> bool {
        score == 0.5
    }
}

impl Classifier for crate::svm::SvmClassifier {
    fn classify(&self, window: &ProcessedWindow) -> Result<(LabelValue, f64)> {
        crate::svm::classify_window(self, window)
    }

    fn model_id(&self) -> String {
        crate::svm::svm_fingerprint(self)
    }

    /// The score is the decision value; zero is the boundary.
    fn is_tie(&self, score: f64) -> bool {
        score == 0.0
    }
}

/// Classifier wrapper with a configurable label for exact decision ties.
/// The defaults resolve ties to non-contact; the wrapper honors the
/// configured rule instead.
pub struct TieBreaking<'a, C: Classifier> {
    pub inner: &'a C,
    pub tie_break: LabelValue,
}

impl<C: Classifier> Classifier for TieBreaking<'_, C> {
    fn classify(&self, window: &ProcessedWindow) -> Result<(LabelValue, f64)> {
        let (label, score) = self.inner.classify(window)?;
        if self.inner.is_tie(score) {
            return Ok((self.tie_break, score));
        }
        Ok((label, score))
    }

    fn model_id(&self) -> String {
        self.inner.model_id()
    }

    fn is_tie(&self, score: f64) -> bool {
        self.inner.is_tie(score)
    }
}

/// Run metadata embedded in every report.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub model_id: String,
    pub dataset_id: String,
    pub seed: u64,
    /// Optional wall-clock stamp; omitted by default so identical runs
    /// produce identical reports.
    pub timestamp: Option<String>,
}

/// Evaluation outcome: the confusion matrix with its derived metrics and
/// provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub matrix: ConfusionMatrix,
    pub metrics: MetricSet,
    pub provenance: Provenance,
}

/// Classifies every test event, accumulates the confusion matrix, and
/// derives the metrics. Training-tagged events are rejected.
pub fn evaluate(
    classifier: &dyn Classifier,
    test_set: &[LabeledEvent],
    provenance: Provenance,
) -> Result<EvalReport> {
    if test_set.is_empty() {
        return Err(PipeError::InvalidParameter("test set is empty".into()));
    }
    for e in test_set {
        if e.split_role == SplitRole::Train {
            return Err(PipeError::Contamination(format!(
                "training-split event '{}' passed to evaluation",
                e.event_id
            )));
        }
    }
    let outcomes: Vec<(LabelValue, LabelValue)> = test_set
        .par_iter()
        .map(|e| {
            let (pred, _) = classifier.classify(&e.window)?;
            Ok((e.label.value, pred))
        })
        .collect::<Result<_>>()?;
    let mut matrix = ConfusionMatrix::zero();
    for (truth, pred) in outcomes {
        matrix.record(truth, pred);
    }
    Ok(EvalReport {
        matrix,
        metrics: metrics(&matrix),
        provenance,
    })
}

/// Searches for an integer confusion matrix on an `n_pos`/`n_neg` test set
/// whose four metrics round to the given whole percentages. Returns the
/// first witness. Used to flag reported metric rows that no actual test
/// run could have produced.
pub fn consistent_matrix_exists(
    n_pos: u64,
    n_neg: u64,
    sens_pct: u64,
    spec_pct: u64,
    acc_pct: u64,
    prec_pct: u64,
) -> Option<ConfusionMatrix> {
    let rounds_to = |value: Option<f64>, pct: u64| -> bool {
        match value {
            Some(v) => (v * 100.0).round() as u64 == pct,
            None => false,
        }
    };
    for tp in 0..=n_pos {
        for fp in 0..=n_neg {
            let m = ConfusionMatrix {
                true_pos: tp,
                false_neg: n_pos - tp,
                false_pos: fp,
                true_neg: n_neg - fp,
            };
            let ms = metrics(&m);
            if rounds_to(ms.sensitivity, sens_pct)
                && rounds_to(ms.specificity, spec_pct)
                && rounds_to(ms.accuracy, acc_pct)
                && rounds_to(ms.precision, prec_pct)
            {
                return Some(m);
            }
        }
    }
    None
}

/// The same search over every class split of a fixed total test size.
pub fn consistent_matrix_exists_any_split(
    total: u64,
    sens_pct: u64,
    spec_pct: u64,
    acc_pct: u64,
    prec_pct: u64,
) -> Option<ConfusionMatrix> {
    (1..total).into_par_iter().find_map_any(|n_pos| {
        consistent_matrix_exists(n_pos, total - n_pos, sens_pct, spec_pct, acc_pct, prec_pct)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SplitRole;
    use crate::kinematics::{Label, Unit};

    #[test]
    fn perfect_classifier_all_ones() {
        let m = ConfusionMatrix {
            true_pos: 65,
            false_neg: 0,
            false_pos: 0,
            true_neg: 100,
        };
        let ms = metrics(&m);
        assert_eq!(ms.sensitivity, Some(1.0));
        assert_eq!(ms.specificity, Some(1.0));
        assert_eq!(ms.accuracy, Some(1.0));
        assert_eq!(ms.precision, Some(1.0));
    }

    #[test]
    fn zero_denominators_are_undefined_not_zero() {
        let ms = metrics(&ConfusionMatrix::zero());
        assert_eq!(ms.sensitivity, None);
        assert_eq!(ms.specificity, None);
        assert_eq!(ms.accuracy, None);
        assert_eq!(ms.precision, None);
        let no_pos = ConfusionMatrix {
            true_pos: 0,
            false_neg: 0,
            false_pos: 3,
            true_neg: 7,
        };
        let ms = metrics(&no_pos);
        assert_eq!(ms.sensitivity, None);
        assert!(ms.specificity.is_some());
    }

    #[test]
    fn metrics_are_scale_free() {
        let base = ConfusionMatrix {
            true_pos: 7,
            false_neg: 3,
            false_pos: 4,
            true_neg: 16,
        };
        for k in [2u64, 5, 13] {
            let scaled = ConfusionMatrix {
                true_pos: base.true_pos * k,
                false_neg: base.false_neg * k,
                false_pos: base.false_pos * k,
                true_neg: base.true_neg * k,
            };
            assert_eq!(metrics(&base), metrics(&scaled));
        }
    }

    #[test]
    fn complements_sum_to_one() {
        let m = ConfusionMatrix {
            true_pos: 56,
            false_neg: 9,
            false_pos: 6,
            true_neg: 94,
        };
        let ms = metrics(&m);
        let miss = m.false_neg as f64 / (m.true_pos + m.false_neg) as f64;
        let fall_out = m.false_pos as f64 / (m.true_neg + m.false_pos) as f64;
        assert!((ms.sensitivity.unwrap() + miss - 1.0).abs() < 1e-15);
        assert!((ms.specificity.unwrap() + fall_out - 1.0).abs() < 1e-15);
    }

    struct FixedClassifier(LabelValue);

    impl Classifier for FixedClassifier {
        fn classify(&self, _w: &ProcessedWindow) -> Result<(LabelValue, f64)> {
            Ok((self.0, 0.5))
        }

        fn model_id(&self) -> String {
            "fixed".into()
        }

        fn is_tie(&self, _score: f64) -> bool {
            false
        }
    }

    fn toy_test_event(id: &str, value: LabelValue) -> LabeledEvent {
        LabeledEvent {
            event_id: id.into(),
            window: ProcessedWindow {
                data: vec![vec![0.0; 10]; 6],
                trigger_col: 2,
                channel_units: [Unit::G; 6],
                normalized: true,
            },
            label: Label::synthetic(value),
            split_role: SplitRole::Test,
        }
    }

    #[test]
    fn evaluate_accumulates_and_recomputes() {
        let set = vec![
            toy_test_event("a", LabelValue::TrueImpact),
            toy_test_event("b", LabelValue::TrueImpact),
            toy_test_event("c", LabelValue::NonContact),
        ];
        let report = evaluate(
            &FixedClassifier(LabelValue::TrueImpact),
            &set,
            Provenance {
                model_id: "fixed".into(),
                dataset_id: "toy".into(),
                seed: 0,
                timestamp: None,
            },
        )
        .unwrap();
        assert_eq!(report.matrix.true_pos, 2);
        assert_eq!(report.matrix.false_pos, 1);
        assert_eq!(report.metrics, metrics(&report.matrix));
        // Deterministic.
        let again = evaluate(
            &FixedClassifier(LabelValue::TrueImpact),
            &set,
            report.provenance.clone(),
        )
        .unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn training_events_contaminate_evaluation() {
        let mut e = toy_test_event("a", LabelValue::TrueImpact);
        e.split_role = SplitRole::Train;
        assert!(matches!(
            evaluate(
                &FixedClassifier(LabelValue::NonContact),
                &[e],
                Provenance {
                    model_id: "fixed".into(),
                    dataset_id: "toy".into(),
                    seed: 0,
                    timestamp: None,
                },
            ),
            Err(PipeError::Contamination(_))
        ));
    }

    #[test]
    fn consistency_checker_accepts_achievable_rows() {
        // 56/9/6/94 rounds to 86/94/91/90.
        let witness = consistent_matrix_exists(65, 100, 86, 94, 91, 90).unwrap();
        let ms = metrics(&witness);
        assert_eq!((ms.sensitivity.unwrap() * 100.0).round() as u64, 86);
        // 63/2/10/90 rounds to 97/90/93/86.
        assert!(consistent_matrix_exists(65, 100, 97, 90, 93, 86).is_some());
    }

    #[test]
    fn consistency_checker_flags_unreachable_rows() {
        // 76% sensitivity with 99% specificity cannot average to 96%
        // accuracy on a 65/100 split.
        assert!(consistent_matrix_exists(65, 100, 76, 99, 96, 86).is_none());
    }
}
