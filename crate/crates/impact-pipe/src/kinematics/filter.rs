//! Signal conditioning: zero-phase low-pass filtering, decimation, and
//! numerical differentiation.

use super::types::{ChannelSeries, Unit};
use crate::error::{PipeError, Result};

/// Second-order Butterworth low-pass biquad coefficients.
///
/// Designed by bilinear transform with frequency prewarping. Applied
/// forward-backward the magnitude response is fourth order.
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    fn lowpass(cutoff_hz: f64, rate_hz: f64) -> Self {
        let k = (std::f64::consts::PI * cutoff_hz / rate_hz).tan();
        let q = std::f64::consts::FRAC_1_SQRT_2;
        let norm = 1.0 / (1.0 + k / q + k * k);
        Biquad {
            b0: k * k * norm,
            b1: 2.0 * k * k * norm,
            b2: k * k * norm,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - k / q + k * k) * norm,
        }
    }

    /// Single forward pass (direct form II transposed), with the internal
    /// state initialized to the step-response steady state scaled by the
    /// first sample. This removes the startup transient for signals that
    /// begin near a plateau.
    fn run(&self, x: &[f64]) -> Vec<f64> {
        let g = (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2);
        let x0 = x[0];
        let mut z1 = (g - self.b0) * x0;
        let mut z2 = (self.b2 - self.a2 * g) * x0;
        let mut y = Vec::with_capacity(x.len());
        for &v in x {
            let out = self.b0 * v + z1;
            z1 = self.b1 * v - self.a1 * out + z2;
            z2 = self.b2 * v - self.a2 * out;
            y.push(out);
        }
        y
    }
}

/// Zero-phase low-pass: forward-backward second-order Butterworth over an
/// odd-reflection padded copy of the signal, giving a fourth-order
/// zero-phase response with suppressed edge transients.
fn filtfilt(x: &[f64], cutoff_hz: f64, rate_hz: f64) -> Vec<f64> {
    let bq = Biquad::lowpass(cutoff_hz, rate_hz);
    // Pad with a few filter time constants, capped by the signal length.
    let pad = ((3.0 * rate_hz / cutoff_hz).ceil() as usize)
        .max(12)
        .min(x.len() - 1);

    let n = x.len();
    let mut padded = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        padded.push(2.0 * x[0] - x[i]);
    }
    padded.extend_from_slice(x);
    for i in (n - pad - 1..n - 1).rev() {
        padded.push(2.0 * x[n - 1] - x[i]);
    }

    let mut y = bq.run(&padded);
    y.reverse();
    let mut y = bq.run(&y);
    y.reverse();
    y[pad..pad + n].to_vec()
}

/// Applies a fourth-order zero-phase low-pass to the series.
///
/// The output has the same length, rate, and unit. Fails if the cutoff is
/// not strictly between 0 and the Nyquist frequency.
pub fn lowpass_filter(series: &ChannelSeries, cutoff_hz: f64) -> Result<ChannelSeries> {
    if !(cutoff_hz > 0.0) || cutoff_hz >= series.rate_hz / 2.0 {
        return Err(PipeError::InvalidParameter(format!(
            "low-pass cutoff {cutoff_hz} Hz must lie in (0, {}) for rate {} Hz",
            series.rate_hz / 2.0,
            series.rate_hz
        )));
    }
    let filtered = filtfilt(&series.samples, cutoff_hz, series.rate_hz);
    ChannelSeries::new(filtered, series.rate_hz, series.unit, series.t0_offset_ms)
}

/// Resamples the series onto a lower rate: low-pass at 0.4x the target rate,
/// then keep every (rate/target)-th sample. The first-sample time offset is
/// preserved. The rate ratio must be an integer.
pub fn decimate(series: &ChannelSeries, target_rate_hz: f64) -> Result<ChannelSeries> {
    if !(target_rate_hz > 0.0) {
        return Err(PipeError::InvalidParameter(format!(
            "target rate must be positive, got {target_rate_hz}"
        )));
    }
    let ratio = series.rate_hz / target_rate_hz;
    let k = ratio.round();
    if (ratio - k).abs() > 1e-9 || k < 1.0 {
        return Err(PipeError::InvalidParameter(format!(
            "rate {} Hz is not an integer multiple of target {} Hz (ratio {ratio})",
            series.rate_hz, target_rate_hz
        )));
    }
    let k = k as usize;
    let filtered = filtfilt(&series.samples, 0.4 * target_rate_hz, series.rate_hz);
    let kept: Vec<f64> = filtered.iter().step_by(k).copied().collect();
    ChannelSeries::new(kept, target_rate_hz, series.unit, series.t0_offset_ms)
}

/// Differentiates an angular-velocity series into angular acceleration.
///
/// Central differences at interior points, one-sided differences at the
/// endpoints so the length stays fixed. Input must be in deg/s; output is
/// converted to rad/s^2.
pub fn differentiate(series: &ChannelSeries) -> Result<ChannelSeries> {
    if series.unit != Unit::DegPerS {
        return Err(PipeError::InvalidParameter(format!(
            "differentiate expects deg/s input, got {}",
            series.unit
        )));
    }
    let x = &series.samples;
    if x.len() < 3 {
        return Err(PipeError::InvalidParameter(format!(
            "differentiate needs at least 3 samples, got {}",
            x.len()
        )));
    }
    let dt = 1.0 / series.rate_hz;
    let to_rad = std::f64::consts::PI / 180.0;
    let n = x.len();
    let mut d = Vec::with_capacity(n);
    d.push((x[1] - x[0]) / dt * to_rad);
    for i in 1..n - 1 {
        d.push((x[i + 1] - x[i - 1]) / (2.0 * dt) * to_rad);
    }
    d.push((x[n - 1] - x[n - 2]) / dt * to_rad);
    ChannelSeries::new(d, series.rate_hz, Unit::RadPerS2, series.t0_offset_ms)
}
