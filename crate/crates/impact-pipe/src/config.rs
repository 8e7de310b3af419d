//! Pipeline configuration: one plain-text key/value file covering every
//! tunable decision in the pipeline, with a canonical serialization whose
//! hash goes into reproducibility blocks.

use crate::dataset::{AugmentClasses, ClassWeights};
use crate::error::{PipeError, Result};
use crate::kinematics::{AngularMode, LabelValue, ProcessingConfig};
use crate::mignet::{Architecture, HeadKind, TrainConfig};
use crate::sim::{RuleClassifier, TriggerConfig};
use crate::svm::{Kernel, SvmTrainConfig, N_FEATURES};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    // Signal chain.
    pub angular_mode: AngularMode,
    pub lowpass_cutoff_hz: f64,
    pub ang_accel_full_scale: f64,
    // Trigger.
    pub threshold_g: f64,
    pub pre_ms: f64,
    pub post_ms: f64,
    pub lin_rate_hz: f64,
    pub ang_rate_hz: f64,
    pub magnitude_trigger: bool,
    // Augmentation.
    pub augment_shifts: usize,
    pub max_shift_ms: usize,
    pub augment_classes: AugmentClasses,
    // Network.
    pub conv1d: Vec<(usize, usize)>,
    pub conv2d: Vec<(usize, usize)>,
    pub head: HeadKind,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub tie_break: LabelValue,
    // Baseline.
    pub svm_kernel: Kernel,
    pub svm_c: f64,
    pub k_folds: usize,
    pub max_features: usize,
    // Rule classifier.
    pub rule_min_width_ms: f64,
    pub rule_min_angular_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            angular_mode: AngularMode::Acceleration,
            lowpass_cutoff_hz: 300.0,
            ang_accel_full_scale: 20_000.0,
            threshold_g: 10.0,
            pre_ms: 50.0,
            post_ms: 150.0,
            lin_rate_hz: 1000.0,
            ang_rate_hz: 8000.0,
            magnitude_trigger: false,
            augment_shifts: 5,
            max_shift_ms: 5,
            augment_classes: AugmentClasses::Both,
            conv1d: vec![(16, 7), (32, 5)],
            conv2d: vec![(32, 3)],
            head: HeadKind::Gap,
            lr: 0.01,
            momentum: 0.9,
            batch_size: 32,
            epochs: 20,
            tie_break: LabelValue::NonContact,
            svm_kernel: Kernel::RbfAuto,
            svm_c: 1.0,
            k_folds: 5,
            max_features: N_FEATURES,
            rule_min_width_ms: 2.5,
            rule_min_angular_fraction: 0.1,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| PipeError::io(path, e))?;
        Self::parse(&body)
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    /// Unknown keys are rejected.
    pub fn parse(body: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in body.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipeError::InvalidParameter(format!(
                    "config line {} is not key=value: '{raw}'",
                    i + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| PipeError::InvalidParameter(format!("bad {what}: '{value}'"));
        let f = |what: &str| -> Result<f64> {
            value.parse().map_err(|_| bad(what))
        };
        let u = |what: &str| -> Result<usize> {
            value.parse().map_err(|_| bad(what))
        };
        let b = |what: &str| -> Result<bool> {
            value.parse().map_err(|_| bad(what))
        };
        match key {
            "angular_mode" => self.angular_mode = AngularMode::parse(value)?,
            "lowpass_cutoff_hz" => self.lowpass_cutoff_hz = f(key)?,
            "ang_accel_full_scale" => self.ang_accel_full_scale = f(key)?,
            "threshold_g" => self.threshold_g = f(key)?,
            "pre_ms" => self.pre_ms = f(key)?,
            "post_ms" => self.post_ms = f(key)?,
            "lin_rate_hz" => self.lin_rate_hz = f(key)?,
            "ang_rate_hz" => self.ang_rate_hz = f(key)?,
            "magnitude_trigger" => self.magnitude_trigger = b(key)?,
            "augment_shifts" => self.augment_shifts = u(key)?,
            "max_shift_ms" => self.max_shift_ms = u(key)?,
            "augment_classes" => self.augment_classes = AugmentClasses::parse(value)?,
            "conv1d" => self.conv1d = Architecture::parse_stage(value)?,
            "conv2d" => self.conv2d = Architecture::parse_stage(value)?,
            "head" => self.head = HeadKind::parse(value)?,
            "lr" => self.lr = f(key)?,
            "momentum" => self.momentum = f(key)?,
            "batch_size" => self.batch_size = u(key)?,
            "epochs" => self.epochs = u(key)?,
            "tie_break" => self.tie_break = LabelValue::parse(value)?,
            "svm_kernel" => {
                self.svm_kernel = match value {
                    "linear" => Kernel::Linear,
                    "rbf_auto" => Kernel::RbfAuto,
                    v if v.starts_with("rbf:") => Kernel::Rbf {
                        gamma: v[4..].parse().map_err(|_| bad("svm_kernel gamma"))?,
                    },
                    _ => return Err(bad("svm_kernel")),
                }
            }
            "svm_c" => self.svm_c = f(key)?,
            "k_folds" => self.k_folds = u(key)?,
            "max_features" => self.max_features = u(key)?,
            "rule_min_width_ms" => self.rule_min_width_ms = f(key)?,
            "rule_min_angular_fraction" => self.rule_min_angular_fraction = f(key)?,
            other => {
                return Err(PipeError::InvalidParameter(format!(
                    "unknown config key '{other}'"
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.trigger_config().validate()?;
        self.architecture().validate()?;
        if self.max_shift_ms < self.augment_shifts {
            return Err(PipeError::InvalidParameter(format!(
                "augment_shifts {} exceeds max_shift_ms {}",
                self.augment_shifts, self.max_shift_ms
            )));
        }
        Ok(())
    }

    /// Canonical form: every knob, fixed order. Hashing this pins a run's
    /// configuration.
    pub fn to_canonical_string(&self) -> String {
        let kernel = match self.svm_kernel {
            Kernel::Linear => "linear".to_string(),
            Kernel::RbfAuto => "rbf_auto".to_string(),
            Kernel::Rbf { gamma } => format!("rbf:{gamma}"),
        };
        format!(
            "angular_mode = {}\n\
             lowpass_cutoff_hz = {}\n\
             ang_accel_full_scale = {}\n\
             threshold_g = {}\n\
             pre_ms = {}\n\
             post_ms = {}\n\
             lin_rate_hz = {}\n\
             ang_rate_hz = {}\n\
             magnitude_trigger = {}\n\
             augment_shifts = {}\n\
             max_shift_ms = {}\n\
             augment_classes = {}\n\
             conv1d = {}\n\
             conv2d = {}\n\
             head = {}\n\
             lr = {}\n\
             momentum = {}\n\
             batch_size = {}\n\
             epochs = {}\n\
             tie_break = {}\n\
             svm_kernel = {}\n\
             svm_c = {}\n\
             k_folds = {}\n\
             max_features = {}\n\
             rule_min_width_ms = {}\n\
             rule_min_angular_fraction = {}\n",
            self.angular_mode.as_str(),
            self.lowpass_cutoff_hz,
            self.ang_accel_full_scale,
            self.threshold_g,
            self.pre_ms,
            self.post_ms,
            self.lin_rate_hz,
            self.ang_rate_hz,
            self.magnitude_trigger,
            self.augment_shifts,
            self.max_shift_ms,
            self.augment_classes.as_str(),
            Architecture::format_stage(&self.conv1d),
            Architecture::format_stage(&self.conv2d),
            self.head.as_str(),
            self.lr,
            self.momentum,
            self.batch_size,
            self.epochs,
            self.tie_break.as_str(),
            kernel,
            self.svm_c,
            self.k_folds,
            self.max_features,
            self.rule_min_width_ms,
            self.rule_min_angular_fraction,
        )
    }

    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_canonical_string().as_bytes());
        let hex = format!("{:x}", h.finalize());
        hex[..12].to_string()
    }

    pub fn trigger_config(&self) -> TriggerConfig {
        TriggerConfig {
            threshold_g: self.threshold_g,
            pre_ms: self.pre_ms,
            post_ms: self.post_ms,
            lin_rate_hz: self.lin_rate_hz,
            ang_rate_hz: self.ang_rate_hz,
            magnitude_trigger: self.magnitude_trigger,
        }
    }

    pub fn processing_config(&self) -> ProcessingConfig {
        ProcessingConfig {
            angular_mode: self.angular_mode,
            lowpass_cutoff_hz: self.lowpass_cutoff_hz,
            ang_accel_full_scale: self.ang_accel_full_scale,
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            conv1d: self.conv1d.clone(),
            conv2d: self.conv2d.clone(),
            head: self.head,
        }
    }

    pub fn train_config(&self, class_weights: ClassWeights, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            momentum: self.momentum,
            batch_size: self.batch_size,
            epochs: self.epochs,
            class_weights,
            seed,
        }
    }

    pub fn svm_config(&self, seed: u64) -> SvmTrainConfig {
        SvmTrainConfig {
            kernel: self.svm_kernel,
            c: self.svm_c,
            k_folds: self.k_folds,
            max_features: self.max_features,
            seed,
        }
    }

    pub fn rule_classifier(&self) -> RuleClassifier {
        RuleClassifier {
            min_width_ms: self.rule_min_width_ms,
            min_angular_fraction: self.rule_min_angular_fraction,
        }
    }
}
