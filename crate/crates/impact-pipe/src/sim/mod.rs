//! Trigger/buffer simulation and synthetic event generation.
//!
//! This module stands in for the physical capture device: it scans a
//! continuous sensor stream for threshold crossings, cuts pre/post-trigger
//! windows out of it, and fabricates labeled impact and artifact segments so
//! the rest of the pipeline has a reproducible desk-scale corpus to train
//! and evaluate on.
//!
//! All randomness goes through ChaCha8 seeded explicitly; per-event seeds
//! are derived with a splitmix64 mix so datasets are reproducible across
//! platforms and parallel schedules.

mod rule;
mod synth;
mod trigger;

pub use rule::RuleClassifier;
pub use synth::{
    derive_event_seed, gen_artifact, gen_dataset, gen_impact, ArtifactFamily, SyntheticKind,
    SyntheticSpec,
};
pub use trigger::run_trigger;

use crate::error::{PipeError, Result};
use crate::kinematics::ChannelSeries;

/// Capture settings of the simulated device.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerConfig {
    /// Linear-acceleration trigger threshold in g (inclusive comparison).
    pub threshold_g: f64,
    /// Pre-trigger buffer length in ms.
    pub pre_ms: f64,
    /// Post-trigger capture length in ms.
    pub post_ms: f64,
    pub lin_rate_hz: f64,
    pub ang_rate_hz: f64,
    /// Trigger on the linear vector magnitude instead of per-axis samples.
    pub magnitude_trigger: bool,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            threshold_g: 10.0,
            pre_ms: 50.0,
            post_ms: 150.0,
            lin_rate_hz: 1000.0,
            ang_rate_hz: 8000.0,
            magnitude_trigger: false,
        }
    }
}

impl TriggerConfig {
    pub fn window_ms(&self) -> f64 {
        self.pre_ms + self.post_ms
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_g > 0.0) {
            return Err(PipeError::InvalidParameter(format!(
                "threshold_g must be positive, got {}",
                self.threshold_g
            )));
        }
        if !(self.pre_ms > 0.0) || !(self.post_ms > 0.0) {
            return Err(PipeError::InvalidParameter(
                "pre_ms and post_ms must be positive".into(),
            ));
        }
        if !(self.lin_rate_hz > 0.0) || !(self.ang_rate_hz > 0.0) {
            return Err(PipeError::InvalidParameter(
                "sample rates must be positive".into(),
            ));
        }
        let ratio = self.ang_rate_hz / self.lin_rate_hz;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(PipeError::InvalidParameter(format!(
                "angular rate must be an integer multiple of the linear rate (ratio {ratio})"
            )));
        }
        Ok(())
    }
}

/// A continuous dual-rate recording with the proximity-gate state.
///
/// The three linear channels run at the linear rate, the three angular
/// channels at the angular rate, and `worn` is sampled on the linear grid.
/// All series start at t = 0 and cover the same time span.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorStream {
    pub device_id: String,
    /// x, y, z linear acceleration in g.
    pub lin: [ChannelSeries; 3],
    /// x, y, z angular velocity in deg/s.
    pub ang: [ChannelSeries; 3],
    /// Proximity gate per linear sample: true = device worn.
    pub worn: Vec<bool>,
}

impl SensorStream {
    pub fn validate(&self) -> Result<()> {
        let n_lin = self.lin[0].samples.len();
        if n_lin == 0 {
            return Err(PipeError::InvalidParameter("empty stream".into()));
        }
        for s in &self.lin {
            if s.samples.len() != n_lin {
                return Err(PipeError::InvalidParameter(
                    "linear channels have mismatched lengths".into(),
                ));
            }
        }
        let ratio = (self.ang[0].rate_hz / self.lin[0].rate_hz).round() as usize;
        for s in &self.ang {
            if s.samples.len() != n_lin * ratio {
                return Err(PipeError::InvalidParameter(
                    "angular channels do not cover the linear time span".into(),
                ));
            }
        }
        if self.worn.len() != n_lin {
            return Err(PipeError::InvalidParameter(
                "worn series does not cover the linear time span".into(),
            ));
        }
        Ok(())
    }

    /// Number of samples on the linear grid.
    pub fn len_lin(&self) -> usize {
        self.lin[0].samples.len()
    }
}
