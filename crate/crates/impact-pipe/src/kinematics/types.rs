//! Core kinematic data types.

use crate::error::{PipeError, Result};
use crate::sim::TriggerConfig;

/// Accelerometer full scale in g.
pub const LIN_FULL_SCALE_G: f64 = 400.0;

/// Gyroscope full scale in deg/s.
pub const ANG_VEL_FULL_SCALE_DPS: f64 = 4000.0;

/// Physical unit of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// Linear acceleration in g.
    G,
    /// Angular velocity in degrees per second.
    DegPerS,
    /// Angular acceleration in radians per second squared.
    RadPerS2,
}

impl Unit {
    pub fn as_str(&self) -> &'static str {
        match self {
            Unit::G => "g",
            Unit::DegPerS => "deg/s",
            Unit::RadPerS2 => "rad/s^2",
        }
    }
}

impl std::fmt::Display for Unit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One uniformly sampled channel of sensor data.
///
/// `t0_offset_ms` is the time of the first sample relative to the trigger
/// instant; negative values are pre-trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSeries {
    pub samples: Vec<f64>,
    pub rate_hz: f64,
    pub unit: Unit,
    pub t0_offset_ms: f64,
}

impl ChannelSeries {
    /// Builds a series, enforcing the type invariants: positive rate,
    /// non-empty samples, all values finite.
    pub fn new(samples: Vec<f64>, rate_hz: f64, unit: Unit, t0_offset_ms: f64) -> Result<Self> {
        if !(rate_hz > 0.0) || !rate_hz.is_finite() {
            return Err(PipeError::InvalidParameter(format!(
                "channel rate must be positive and finite, got {rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(PipeError::InvalidParameter(
                "channel series must be non-empty".into(),
            ));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(PipeError::InvalidParameter(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            rate_hz,
            unit,
            t0_offset_ms,
        })
    }

    /// Sample spacing in milliseconds.
    pub fn dt_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }

    /// Total duration covered by the samples, in milliseconds.
    pub fn span_ms(&self) -> f64 {
        self.samples.len() as f64 * self.dt_ms()
    }
}

/// One triggered recording: tri-axial linear acceleration plus tri-axial
/// angular velocity with device and trigger metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicEvent {
    pub event_id: String,
    pub device_id: String,
    /// ISO-8601 wall-clock timestamp of the trigger, kept opaque.
    pub trigger_time: String,
    /// x, y, z linear acceleration in g.
    pub lin_acc: [ChannelSeries; 3],
    /// x, y, z angular velocity in deg/s.
    pub ang_vel: [ChannelSeries; 3],
    pub trigger_config: TriggerConfig,
    /// Proximity-gate state at the trigger instant.
    pub worn_flag: bool,
}

impl KinematicEvent {
    /// Checks every event invariant: per-channel rates and units, window
    /// spans implied by the trigger config, and sensor full-scale bounds.
    pub fn validate(&self) -> Result<()> {
        let cfg = &self.trigger_config;
        let window_ms = cfg.pre_ms + cfg.post_ms;
        let lin_len = (cfg.lin_rate_hz * window_ms / 1000.0).round() as usize;
        let ang_len = (cfg.ang_rate_hz * window_ms / 1000.0).round() as usize;

        for (axis, s) in ["x", "y", "z"].iter().zip(self.lin_acc.iter()) {
            if s.unit != Unit::G {
                return Err(PipeError::MalformedEvent(format!(
                    "lin_{axis} has unit {} (expected g)",
                    s.unit
                )));
            }
            if (s.rate_hz - cfg.lin_rate_hz).abs() > 1e-9 {
                return Err(PipeError::MalformedEvent(format!(
                    "lin_{axis} rate {} does not match trigger config {}",
                    s.rate_hz, cfg.lin_rate_hz
                )));
            }
            if s.samples.len() != lin_len {
                return Err(PipeError::MalformedEvent(format!(
                    "lin_{axis} has {} samples, expected {lin_len} for a {window_ms} ms window",
                    s.samples.len()
                )));
            }
            if (s.t0_offset_ms + cfg.pre_ms).abs() > 1e-9 {
                return Err(PipeError::MalformedEvent(format!(
                    "lin_{axis} t0 offset {} does not match pre-trigger {} ms",
                    s.t0_offset_ms, cfg.pre_ms
                )));
            }
            if let Some(v) = s.samples.iter().find(|v| v.abs() > LIN_FULL_SCALE_G) {
                return Err(PipeError::MalformedEvent(format!(
                    "lin_{axis} sample {v} exceeds full scale {LIN_FULL_SCALE_G} g"
                )));
            }
        }
        for (axis, s) in ["x", "y", "z"].iter().zip(self.ang_vel.iter()) {
            if s.unit != Unit::DegPerS {
                return Err(PipeError::MalformedEvent(format!(
                    "ang_{axis} has unit {} (expected deg/s)",
                    s.unit
                )));
            }
            if (s.rate_hz - cfg.ang_rate_hz).abs() > 1e-9 {
                return Err(PipeError::MalformedEvent(format!(
                    "ang_{axis} rate {} does not match trigger config {}",
                    s.rate_hz, cfg.ang_rate_hz
                )));
            }
            if s.samples.len() != ang_len {
                return Err(PipeError::MalformedEvent(format!(
                    "ang_{axis} has {} samples, expected {ang_len} for a {window_ms} ms window",
                    s.samples.len()
                )));
            }
            if (s.t0_offset_ms + cfg.pre_ms).abs() > 1e-9 {
                return Err(PipeError::MalformedEvent(format!(
                    "ang_{axis} t0 offset {} does not match pre-trigger {} ms",
                    s.t0_offset_ms, cfg.pre_ms
                )));
            }
            if let Some(v) = s.samples.iter().find(|v| v.abs() > ANG_VEL_FULL_SCALE_DPS) {
                return Err(PipeError::MalformedEvent(format!(
                    "ang_{axis} sample {v} exceeds full scale {ANG_VEL_FULL_SCALE_DPS} deg/s"
                )));
            }
        }
        Ok(())
    }
}

/// Which angular quantity feeds rows 3-5 of the classifier input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngularMode {
    /// Angular velocity in deg/s, conditioned and decimated.
    Velocity,
    /// Angular acceleration in rad/s^2, derived from the gyroscope stream.
    Acceleration,
}

impl AngularMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AngularMode::Velocity => "velocity",
            AngularMode::Acceleration => "acceleration",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "velocity" => Ok(AngularMode::Velocity),
            "acceleration" => Ok(AngularMode::Acceleration),
            other => Err(PipeError::InvalidParameter(format!(
                "unknown angular_mode '{other}' (expected velocity|acceleration)"
            ))),
        }
    }
}

/// Knobs for the raw-event -> window transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessingConfig {
    pub angular_mode: AngularMode,
    /// Conditioning low-pass cutoff applied to the angular stream, in Hz.
    pub lowpass_cutoff_hz: f64,
    /// Normalization full scale for derived angular acceleration, in rad/s^2.
    pub ang_accel_full_scale: f64,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        Self {
            angular_mode: AngularMode::Acceleration,
            lowpass_cutoff_hz: 300.0,
            ang_accel_full_scale: 20_000.0,
        }
    }
}

/// The 6-row uniform-grid matrix fed to the classifiers.
///
/// Rows 0-2 are linear acceleration x, y, z; rows 3-5 the angular channel.
/// Columns step at the linear sample rate (1 ms for the default config).
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedWindow {
    /// 6 rows, each with the same column count.
    pub data: Vec<Vec<f64>>,
    /// Column index of the trigger instant.
    pub trigger_col: usize,
    pub channel_units: [Unit; 6],
    pub normalized: bool,
}

impl ProcessedWindow {
    pub fn n_cols(&self) -> usize {
        self.data.first().map(|r| r.len()).unwrap_or(0)
    }

    /// Index of the first maximum of |row|, the per-row peak location.
    pub fn argmax_abs(&self, row: usize) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, v) in self.data[row].iter().enumerate() {
            if v.abs() > best_v {
                best_v = v.abs();
                best = i;
            }
        }
        best
    }
}

/// Ground-truth class of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelValue {
    TrueImpact,
    NonContact,
}

impl LabelValue {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelValue::TrueImpact => "true_impact",
            LabelValue::NonContact => "non_contact",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "true_impact" => Ok(LabelValue::TrueImpact),
            "non_contact" => Ok(LabelValue::NonContact),
            other => Err(PipeError::InvalidParameter(format!(
                "unknown label '{other}' (expected true_impact|non_contact)"
            ))),
        }
    }
}

/// Where a label (and its signal) came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LabelSource {
    /// Confirmed against recorded video.
    VideoVerified,
    /// Produced by the event generator.
    Synthetic,
    /// Time-shifted copy of another event; carries the parent id.
    Augmented { parent_id: String },
}

impl LabelSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelSource::VideoVerified => "video_verified",
            LabelSource::Synthetic => "synthetic",
            LabelSource::Augmented { .. } => "augmented",
        }
    }
}

/// Class label plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub value: LabelValue,
    pub source: LabelSource,
}

impl Label {
    pub fn synthetic(value: LabelValue) -> Self {
        Label {
            value,
            source: LabelSource::Synthetic,
        }
    }
}
