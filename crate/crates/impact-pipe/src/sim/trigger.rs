//! Threshold trigger scan over a continuous stream.

use super::{SensorStream, TriggerConfig};
use crate::error::{PipeError, Result};
use crate::kinematics::{ChannelSeries, KinematicEvent, Unit, LIN_FULL_SCALE_G};

/// Scans the stream and cuts one pre/post window per trigger.
///
/// A trigger fires at linear sample `i` when the device is worn at `i` and
/// the threshold test passes: any axis `|lin[i]| >= threshold_g`, or the
/// vector magnitude when `magnitude_trigger` is set. While a window is being
/// captured no further trigger can fire; the next candidate sample is the
/// first one past the post-trigger span. Crossings too close to the stream
/// edges to supply full pre/post data never start a capture, so they neither
/// emit an event nor suppress later crossings.
///
/// Captured samples are clamped to the accelerometer/gyroscope full scale,
/// mirroring sensor saturation.
pub fn run_trigger(stream: &SensorStream, cfg: &TriggerConfig) -> Result<Vec<KinematicEvent>> {
    cfg.validate()?;
    stream.validate()?;
    if (stream.lin[0].rate_hz - cfg.lin_rate_hz).abs() > 1e-9
        || (stream.ang[0].rate_hz - cfg.ang_rate_hz).abs() > 1e-9
    {
        return Err(PipeError::InvalidParameter(format!(
            "stream rates ({}, {}) do not match trigger config ({}, {})",
            stream.lin[0].rate_hz, stream.ang[0].rate_hz, cfg.lin_rate_hz, cfg.ang_rate_hz
        )));
    }

    let n = stream.len_lin();
    let pre = (cfg.pre_ms * cfg.lin_rate_hz / 1000.0).round() as usize;
    let post = (cfg.post_ms * cfg.lin_rate_hz / 1000.0).round() as usize;
    if pre + post >= n {
        return Err(PipeError::InvalidParameter(format!(
            "stream of {n} samples is shorter than the {} sample capture window",
            pre + post
        )));
    }
    let ratio = (cfg.ang_rate_hz / cfg.lin_rate_hz).round() as usize;

    let crossing = |i: usize| -> bool {
        if !stream.worn[i] {
            return false;
        }
        if cfg.magnitude_trigger {
            let m2: f64 = stream.lin.iter().map(|s| s.samples[i] * s.samples[i]).sum();
            m2.sqrt() >= cfg.threshold_g
        } else {
            stream.lin.iter().any(|s| s.samples[i].abs() >= cfg.threshold_g)
        }
    };

    let mut events = Vec::new();
    let mut i = 0;
    while i < n {
        if crossing(i) {
            let feasible = i >= pre && i + post <= n;
            if feasible {
                events.push(cut_event(stream, cfg, i, pre, post, ratio, events.len())?);
                i += post; // refractory: remainder of the capture window
                continue;
            }
        }
        i += 1;
    }
    Ok(events)
}

fn cut_event(
    stream: &SensorStream,
    cfg: &TriggerConfig,
    trigger_idx: usize,
    pre: usize,
    post: usize,
    ratio: usize,
    seq: usize,
) -> Result<KinematicEvent> {
    let lin_slice = |s: &ChannelSeries| -> Result<ChannelSeries> {
        let cut: Vec<f64> = s.samples[trigger_idx - pre..trigger_idx + post]
            .iter()
            .map(|v| v.clamp(-LIN_FULL_SCALE_G, LIN_FULL_SCALE_G))
            .collect();
        ChannelSeries::new(cut, cfg.lin_rate_hz, Unit::G, -cfg.pre_ms)
    };
    let ang_full_scale = crate::kinematics::ANG_VEL_FULL_SCALE_DPS;
    let ang_slice = |s: &ChannelSeries| -> Result<ChannelSeries> {
        let a0 = (trigger_idx - pre) * ratio;
        let a1 = (trigger_idx + post) * ratio;
        let cut: Vec<f64> = s.samples[a0..a1]
            .iter()
            .map(|v| v.clamp(-ang_full_scale, ang_full_scale))
            .collect();
        ChannelSeries::new(cut, cfg.ang_rate_hz, Unit::DegPerS, -cfg.pre_ms)
    };

    let event = KinematicEvent {
        event_id: format!("trig-{seq:05}"),
        device_id: stream.device_id.clone(),
        trigger_time: iso_offset_time(trigger_idx as f64 / cfg.lin_rate_hz),
        lin_acc: [
            lin_slice(&stream.lin[0])?,
            lin_slice(&stream.lin[1])?,
            lin_slice(&stream.lin[2])?,
        ],
        ang_vel: [
            ang_slice(&stream.ang[0])?,
            ang_slice(&stream.ang[1])?,
            ang_slice(&stream.ang[2])?,
        ],
        trigger_config: cfg.clone(),
        worn_flag: stream.worn[trigger_idx],
    };
    event.validate()?;
    Ok(event)
}

/// ISO-8601 timestamp at the given offset (seconds) into a nominal session.
fn iso_offset_time(offset_s: f64) -> String {
    let total_ms = (offset_s * 1000.0).round() as u64;
    let ms = total_ms % 1000;
    let s = (total_ms / 1000) % 60;
    let m = (total_ms / 60_000) % 60;
    let h = total_ms / 3_600_000;
    format!("2020-09-01T{h:02}:{m:02}:{s:02}.{ms:03}Z")
}
