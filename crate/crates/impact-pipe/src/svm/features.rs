//! Engineered features over processed windows.
//!
//! Per channel (6 rows x 6 features, in row order):
//!   0. peak absolute value
//!   1. time to peak, ms from the trigger column (0 for an all-zero row)
//!   2. signed integral (value x ms)
//!   3. duration above 50% of the peak, ms (contiguous run around the peak)
//!   4. zero-crossing count
//!   5. mid-band energy fraction: periodogram energy in 100-300 Hz over the
//!      total in 0-100 / 100-300 / 300-500 Hz
//! plus two cross-channel features:
//!   36. linear vector-magnitude peak (rows 0-2)
//!   37. angular / linear energy ratio (rows 3-5 over rows 0-2)
//!
//! Columns are assumed to sit on the 1000 Hz grid the window builder
//! produces.

use crate::error::{PipeError, Result};
use crate::kinematics::ProcessedWindow;

/// Features per channel.
const PER_CHANNEL: usize = 6;
/// Total feature count: 6 channels x 6 + 2 cross-channel.
pub const N_FEATURES: usize = 6 * PER_CHANNEL + 2;

const GRID_HZ: f64 = 1000.0;

/// Named real features for one event, in the documented order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

/// The documented feature order.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(N_FEATURES);
    for ch in 0..6 {
        for f in [
            "peak_abs",
            "time_to_peak_ms",
            "signed_integral",
            "duration_above_half_ms",
            "zero_crossings",
            "midband_energy_fraction",
        ] {
            names.push(format!("ch{ch}_{f}"));
        }
    }
    names.push("lin_magnitude_peak".into());
    names.push("ang_lin_energy_ratio".into());
    names
}

pub fn extract_features(window: &ProcessedWindow) -> Result<FeatureVector> {
    if window.data.len() != 6 || window.n_cols() < 4 {
        return Err(PipeError::Shape(format!(
            "feature extraction expects 6 rows and at least 4 columns, got {}x{}",
            window.data.len(),
            window.n_cols()
        )));
    }
    let n = window.n_cols();
    let dt_ms = 1000.0 / GRID_HZ;
    let mut values = Vec::with_capacity(N_FEATURES);

    for row in &window.data {
        let (peak_idx, peak) = argmax_abs(row);
        values.push(peak);
        let ttp = if peak == 0.0 {
            0.0
        } else {
            (peak_idx as f64 - window.trigger_col as f64) * dt_ms
        };
        values.push(ttp);
        values.push(row.iter().sum::<f64>() * dt_ms);
        values.push(duration_above_half_ms(row, peak_idx, peak, dt_ms));
        values.push(zero_crossings(row) as f64);
        values.push(midband_fraction(row, n));
    }

    let lin_peak = (0..n)
        .map(|i| {
            (window.data[0][i].powi(2) + window.data[1][i].powi(2) + window.data[2][i].powi(2))
                .sqrt()
        })
        .fold(0.0_f64, f64::max);
    values.push(lin_peak);

    let energy = |rows: std::ops::Range<usize>| -> f64 {
        rows.map(|r| window.data[r].iter().map(|v| v * v).sum::<f64>())
            .sum()
    };
    let lin_e = energy(0..3);
    let ang_e = energy(3..6);
    values.push(if lin_e > 0.0 { ang_e / lin_e } else { 0.0 });

    debug_assert_eq!(values.len(), N_FEATURES);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(PipeError::InvalidParameter(format!(
            "non-finite feature '{}'",
            feature_names()[i]
        )));
    }
    Ok(FeatureVector { values })
}

fn argmax_abs(row: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_v = 0.0;
    for (i, v) in row.iter().enumerate() {
        if v.abs() > best_v {
            best_v = v.abs();
            best = i;
        }
    }
    (best, best_v)
}

fn duration_above_half_ms(row: &[f64], peak_idx: usize, peak: f64, dt_ms: f64) -> f64 {
    if peak <= 0.0 {
        return 0.0;
    }
    let half = peak / 2.0;
    let mut lo = peak_idx;
    while lo > 0 && row[lo - 1].abs() >= half {
        lo -= 1;
    }
    let mut hi = peak_idx;
    while hi + 1 < row.len() && row[hi + 1].abs() >= half {
        hi += 1;
    }
    (hi - lo + 1) as f64 * dt_ms
}

fn zero_crossings(row: &[f64]) -> usize {
    row.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

/// Energy fraction of the 100-300 Hz band against the 0-500 Hz total,
/// from a direct-DFT periodogram on the 1000 Hz grid.
fn midband_fraction(row: &[f64], n: usize) -> f64 {
    let mut low = 0.0;
    let mut mid = 0.0;
    let mut high = 0.0;
    for k in 1..=n / 2 {
        let f = k as f64 * GRID_HZ / n as f64;
        if f > 500.0 {
            break;
        }
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in row.iter().enumerate() {
            let ph = std::f64::consts::TAU * k as f64 * i as f64 / n as f64;
            re += v * ph.cos();
            im -= v * ph.sin();
        }
        let p = re * re + im * im;
        if f < 100.0 {
            low += p;
        } else if f < 300.0 {
            mid += p;
        } else {
            high += p;
        }
    }
    let total = low + mid + high;
    if total > 0.0 {
        mid / total
    } else {
        0.0
    }
}

/// Per-feature z-score parameters, fit on training data only.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(PipeError::InvalidParameter(
                "cannot fit a standardizer on an empty table".into(),
            ));
        }
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut sd = vec![0.0; d];
        for r in rows {
            for j in 0..d {
                sd[j] += (r[j] - mean[j]).powi(2);
            }
        }
        for s in sd.iter_mut() {
            *s = (*s / n).sqrt();
            // Constant features pass through unscaled.
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Ok(Standardizer { mean, sd })
    }

    /// Identity transform of the given width.
    pub fn identity(d: usize) -> Self {
        Standardizer {
            mean: vec![0.0; d],
            sd: vec![1.0; d],
        }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(self.sd.iter()))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}
