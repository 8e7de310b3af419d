//! Raw event -> fixed-size classifier input.

use super::filter::{decimate, differentiate, lowpass_filter};
use super::types::{
    AngularMode, KinematicEvent, ProcessedWindow, ProcessingConfig, Unit, ANG_VEL_FULL_SCALE_DPS,
    LIN_FULL_SCALE_G,
};
use crate::error::{PipeError, Result};

/// Builds the 6-row window from a validated event.
///
/// Rows 0-2 are the linear channels copied onto their native grid. Rows 3-5
/// carry the angular channel: low-pass conditioned, differentiated into
/// angular acceleration when the mode asks for it, then decimated onto the
/// linear grid. The trigger lands at the column given by the pre-trigger
/// time.
pub fn build_window(event: &KinematicEvent, cfg: &ProcessingConfig) -> Result<ProcessedWindow> {
    event.validate()?;
    let tc = &event.trigger_config;
    let n_cols = (tc.lin_rate_hz * (tc.pre_ms + tc.post_ms) / 1000.0).round() as usize;
    let trigger_col = (tc.lin_rate_hz * tc.pre_ms / 1000.0).round() as usize;

    let mut data: Vec<Vec<f64>> = Vec::with_capacity(6);
    for s in &event.lin_acc {
        data.push(s.samples.clone());
    }

    let ang_unit = match cfg.angular_mode {
        AngularMode::Velocity => Unit::DegPerS,
        AngularMode::Acceleration => Unit::RadPerS2,
    };
    for s in &event.ang_vel {
        let conditioned = lowpass_filter(s, cfg.lowpass_cutoff_hz)?;
        let chain = match cfg.angular_mode {
            AngularMode::Velocity => conditioned,
            AngularMode::Acceleration => differentiate(&conditioned)?,
        };
        let on_grid = decimate(&chain, tc.lin_rate_hz)?;
        if on_grid.samples.len() != n_cols {
            return Err(PipeError::MalformedEvent(format!(
                "angular channel decimated to {} columns, expected {n_cols}",
                on_grid.samples.len()
            )));
        }
        data.push(on_grid.samples);
    }

    Ok(ProcessedWindow {
        data,
        trigger_col,
        channel_units: [Unit::G, Unit::G, Unit::G, ang_unit, ang_unit, ang_unit],
        normalized: false,
    })
}

/// Scales every row onto [-1, 1] by its sensor full scale: 400 g for linear
/// rows, 4000 deg/s for angular velocity, and the configured constant for
/// derived angular acceleration. Values beyond full scale are clipped.
/// Normalizing twice is an error.
pub fn normalize(mut window: ProcessedWindow, cfg: &ProcessingConfig) -> Result<ProcessedWindow> {
    if window.normalized {
        return Err(PipeError::InvalidState(
            "window is already normalized".into(),
        ));
    }
    for (row, unit) in window.data.iter_mut().zip(window.channel_units.iter()) {
        let scale = match unit {
            Unit::G => LIN_FULL_SCALE_G,
            Unit::DegPerS => ANG_VEL_FULL_SCALE_DPS,
            Unit::RadPerS2 => cfg.ang_accel_full_scale,
        };
        for v in row.iter_mut() {
            *v = (*v / scale).clamp(-1.0, 1.0);
        }
    }
    window.normalized = true;
    Ok(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::ChannelSeries;
    use crate::sim::TriggerConfig;

    fn test_event(lin: [Vec<f64>; 3], ang: [Vec<f64>; 3]) -> KinematicEvent {
        let tc = TriggerConfig::default();
        let mk = |v: Vec<f64>, rate, unit| ChannelSeries::new(v, rate, unit, -tc.pre_ms).unwrap();
        KinematicEvent {
            event_id: "ev-test".into(),
            device_id: "dev-0".into(),
            trigger_time: "2020-01-01T00:00:00Z".into(),
            lin_acc: lin.map(|v| mk(v, tc.lin_rate_hz, Unit::G)),
            ang_vel: ang.map(|v| mk(v, tc.ang_rate_hz, Unit::DegPerS)),
            trigger_config: tc,
            worn_flag: true,
        }
    }

    fn zero_event() -> KinematicEvent {
        test_event(
            [vec![0.0; 200], vec![0.0; 200], vec![0.0; 200]],
            [vec![0.0; 1600], vec![0.0; 1600], vec![0.0; 1600]],
        )
    }

    /// 20 g half-sine pulse of the given width, centered on the trigger.
    fn half_sine_lin(peak: f64, width_ms: f64) -> Vec<f64> {
        (0..200)
            .map(|i| {
                let t = i as f64 - 50.0; // ms relative to trigger
                if t >= 0.0 && t <= width_ms {
                    peak * (std::f64::consts::PI * t / width_ms).sin()
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn zero_event_gives_zero_window() {
        let w = build_window(&zero_event(), &ProcessingConfig::default()).unwrap();
        assert_eq!(w.data.len(), 6);
        assert_eq!(w.n_cols(), 200);
        assert_eq!(w.trigger_col, 50);
        for row in &w.data {
            for v in row {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(!w.normalized);
    }

    #[test]
    fn half_sine_peak_lands_at_trigger_column() {
        let mut e = zero_event();
        e.lin_acc[0] =
            ChannelSeries::new(half_sine_lin(20.0, 10.0), 1000.0, Unit::G, -50.0).unwrap();
        let w = build_window(&e, &ProcessingConfig::default()).unwrap();
        // Half-sine peaks at width/2 = 5 ms after the trigger.
        let peak_col = w.argmax_abs(0);
        assert!(
            (peak_col as i64 - 55).unsigned_abs() <= 1,
            "peak at column {peak_col}"
        );
    }

    #[test]
    fn angular_rows_decimate_to_200_columns() {
        let mut e = zero_event();
        let wave: Vec<f64> = (0..1600)
            .map(|i| 100.0 * (2.0 * std::f64::consts::PI * 30.0 * i as f64 / 8000.0).sin())
            .collect();
        e.ang_vel[1] = ChannelSeries::new(wave, 8000.0, Unit::DegPerS, -50.0).unwrap();
        let w = build_window(&e, &ProcessingConfig::default()).unwrap();
        for row in 3..6 {
            assert_eq!(w.data[row].len(), 200);
        }
        assert_eq!(w.channel_units[3], Unit::RadPerS2);
    }

    #[test]
    fn velocity_mode_keeps_deg_per_s() {
        let cfg = ProcessingConfig {
            angular_mode: AngularMode::Velocity,
            ..ProcessingConfig::default()
        };
        let w = build_window(&zero_event(), &cfg).unwrap();
        assert_eq!(w.channel_units[5], Unit::DegPerS);
    }

    #[test]
    fn build_window_is_deterministic_bit_for_bit() {
        let mut e = zero_event();
        e.lin_acc[2] =
            ChannelSeries::new(half_sine_lin(35.0, 8.0), 1000.0, Unit::G, -50.0).unwrap();
        let wave: Vec<f64> = (0..1600)
            .map(|i| 900.0 * (2.0 * std::f64::consts::PI * 45.0 * i as f64 / 8000.0).sin())
            .collect();
        e.ang_vel[0] = ChannelSeries::new(wave, 8000.0, Unit::DegPerS, -50.0).unwrap();
        let cfg = ProcessingConfig::default();
        let a = build_window(&e, &cfg).unwrap();
        let b = build_window(&e, &cfg).unwrap();
        for (ra, rb) in a.data.iter().zip(b.data.iter()) {
            for (va, vb) in ra.iter().zip(rb.iter()) {
                assert_eq!(va.to_bits(), vb.to_bits());
            }
        }
    }

    #[test]
    fn normalize_full_scale_maps_to_one() {
        let mut e = zero_event();
        let mut lin = vec![0.0; 200];
        lin[60] = 400.0;
        e.lin_acc[0] = ChannelSeries::new(lin, 1000.0, Unit::G, -50.0).unwrap();
        let cfg = ProcessingConfig::default();
        let w = normalize(build_window(&e, &cfg).unwrap(), &cfg).unwrap();
        assert!(w.normalized);
        assert_eq!(w.data[0][60], 1.0);
    }

    #[test]
    fn normalize_zero_window_stays_zero() {
        let cfg = ProcessingConfig::default();
        let w = normalize(build_window(&zero_event(), &cfg).unwrap(), &cfg).unwrap();
        assert!(w.normalized);
        for row in &w.data {
            assert!(row.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn normalize_half_scale_peak() {
        let mut e = zero_event();
        e.lin_acc[1] =
            ChannelSeries::new(half_sine_lin(200.0, 10.0), 1000.0, Unit::G, -50.0).unwrap();
        let cfg = ProcessingConfig::default();
        let w = normalize(build_window(&e, &cfg).unwrap(), &cfg).unwrap();
        let peak = w.data[1].iter().cloned().fold(0.0_f64, f64::max);
        assert!((peak - 0.5).abs() < 1e-12, "peak {peak}");
    }

    #[test]
    fn normalize_twice_is_an_error() {
        let cfg = ProcessingConfig::default();
        let w = normalize(build_window(&zero_event(), &cfg).unwrap(), &cfg).unwrap();
        assert!(matches!(
            normalize(w, &cfg),
            Err(PipeError::InvalidState(_))
        ));
    }

    #[test]
    fn normalize_preserves_per_row_argmax() {
        let mut e = zero_event();
        e.lin_acc[0] =
            ChannelSeries::new(half_sine_lin(120.0, 12.0), 1000.0, Unit::G, -50.0).unwrap();
        let wave: Vec<f64> = (0..1600)
            .map(|i| 1500.0 * (2.0 * std::f64::consts::PI * 25.0 * i as f64 / 8000.0).sin())
            .collect();
        e.ang_vel[2] = ChannelSeries::new(wave, 8000.0, Unit::DegPerS, -50.0).unwrap();
        let cfg = ProcessingConfig::default();
        let before = build_window(&e, &cfg).unwrap();
        let arg_before: Vec<usize> = (0..6).map(|r| before.argmax_abs(r)).collect();
        let after = normalize(before, &cfg).unwrap();
        let arg_after: Vec<usize> = (0..6).map(|r| after.argmax_abs(r)).collect();
        assert_eq!(arg_before, arg_after);
    }
}
