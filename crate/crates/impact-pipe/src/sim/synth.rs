//! Synthetic impact and artifact generators.
//!
//! The generators produce short stream segments that cross the trigger
//! threshold, labeled by construction. The signal families are stated
//! modeling assumptions for a desk-scale corpus, not claims about field
//! data: impacts are haversine pulses with correlated angular motion;
//! artifacts are oscillatory bursts, spike trains, or slow bite ramps, all
//! with low angular content.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{run_trigger, SensorStream, TriggerConfig};
use crate::error::{PipeError, Result};
use crate::kinematics::{
    ChannelSeries, KinematicEvent, Label, LabelValue, Unit, ANG_VEL_FULL_SCALE_DPS,
    LIN_FULL_SCALE_G,
};

/// Which class a synthetic segment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    Impact,
    Artifact,
}

/// The three false-trigger signal families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactFamily {
    /// High-frequency oscillatory burst (150-450 Hz carrier) on the linear
    /// channels.
    Burst,
    /// Sharp single-sample spike train.
    SpikeTrain,
    /// Slow bite ramp with superimposed jitter.
    BiteRamp,
}

/// Parameters for one synthetic segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    /// Peak of the linear vector magnitude, in g.
    pub peak_g: f64,
    /// Pulse duration in ms; drawn uniformly from 6-15 ms when absent.
    pub duration_ms: Option<f64>,
    /// Peak angular velocity in deg/s (impacts only; artifacts carry noise).
    pub ang_peak_dps: f64,
    /// RMS of the additive Gaussian sensor noise on the linear channels, in g.
    pub noise_rms_g: f64,
    /// Forced artifact family; drawn from the seed when absent.
    pub artifact_family: Option<ArtifactFamily>,
    pub rng_seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.peak_g > 0.0) {
            return Err(PipeError::InvalidParameter(format!(
                "peak_g must be positive, got {}",
                self.peak_g
            )));
        }
        if let Some(d) = self.duration_ms {
            if !(d > 0.0) {
                return Err(PipeError::InvalidParameter(format!(
                    "duration_ms must be positive, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// Segment length produced by the generators, in ms.
const SEGMENT_MS: usize = 400;
/// Angular sensor noise per g of linear noise, in deg/s.
const ANG_NOISE_DPS_PER_G: f64 = 10.0;

/// Derives a per-event seed from (dataset seed, class tag, event index)
/// with a splitmix64 finalizer, so datasets can be generated out of order
/// or in parallel without changing their content.
pub fn derive_event_seed(seed: u64, class_tag: u64, index: u64) -> u64 {
    let mut z = seed
        ^ class_tag.rotate_left(32)
        ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-6 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Haversine pulse value at time `t` for a pulse spanning [start, start+dur].
fn haversine(t: f64, start: f64, dur: f64) -> f64 {
    if t < start || t > start + dur {
        return 0.0;
    }
    let x = (t - start) / dur;
    (std::f64::consts::PI * x).sin().powi(2)
}

struct SegmentBuilder {
    lin: [Vec<f64>; 3],
    ang: [Vec<f64>; 3],
    n_lin: usize,
    n_ang: usize,
}

impl SegmentBuilder {
    fn new() -> Self {
        let n_lin = SEGMENT_MS;
        let n_ang = SEGMENT_MS * 8;
        SegmentBuilder {
            lin: [vec![0.0; n_lin], vec![0.0; n_lin], vec![0.0; n_lin]],
            ang: [vec![0.0; n_ang], vec![0.0; n_ang], vec![0.0; n_ang]],
            n_lin,
            n_ang,
        }
    }

    fn add_noise(&mut self, rng: &mut ChaCha8Rng, lin_rms: f64) {
        let ang_rms = lin_rms * ANG_NOISE_DPS_PER_G;
        for axis in &mut self.lin {
            for v in axis.iter_mut() {
                let n: f64 = StandardNormal.sample(rng);
                *v += lin_rms * n;
            }
        }
        for axis in &mut self.ang {
            for v in axis.iter_mut() {
                let n: f64 = StandardNormal.sample(rng);
                *v += ang_rms * n;
            }
        }
    }

    fn finish(self, device_id: &str) -> SensorStream {
        let clampv = |v: Vec<f64>, fs: f64| -> Vec<f64> {
            v.into_iter().map(|x| x.clamp(-fs, fs)).collect()
        };
        let lin = self
            .lin
            .map(|v| ChannelSeries::new(clampv(v, LIN_FULL_SCALE_G), 1000.0, Unit::G, 0.0).unwrap());
        let ang = self.ang.map(|v| {
            ChannelSeries::new(
                clampv(v, ANG_VEL_FULL_SCALE_DPS),
                8000.0,
                Unit::DegPerS,
                0.0,
            )
            .unwrap()
        });
        let n = self.n_lin;
        SensorStream {
            device_id: device_id.into(),
            lin,
            ang,
            worn: vec![true; n],
        }
    }
}

/// Generates a true-impact segment: a haversine linear pulse of the given
/// vector-magnitude peak along a random direction, with a smooth correlated
/// angular pulse and additive sensor noise. Deterministic in the seed.
pub fn gen_impact(spec: &SyntheticSpec) -> Result<(SensorStream, Label)> {
    spec.validate()?;
    if spec.kind != SyntheticKind::Impact {
        return Err(PipeError::InvalidParameter(
            "gen_impact called with a non-impact spec".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let duration = spec
        .duration_ms
        .unwrap_or_else(|| rng.gen_range(6.0..15.0));
    let dir = unit_vector(&mut rng);
    // Angular axis: perpendicular-ish to the hit direction, as a rigid body
    // rotating about an axis normal to the applied force.
    let raw = cross(dir, unit_vector(&mut rng));
    let norm = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
    let ang_dir = if norm > 1e-6 {
        [raw[0] / norm, raw[1] / norm, raw[2] / norm]
    } else {
        [1.0, 0.0, 0.0]
    };

    let mut seg = SegmentBuilder::new();
    let start_ms = SEGMENT_MS as f64 / 2.0 - duration / 2.0;
    for i in 0..seg.n_lin {
        let t = i as f64;
        let p = spec.peak_g * haversine(t, start_ms, duration);
        for a in 0..3 {
            seg.lin[a][i] += dir[a] * p;
        }
    }
    // The angular pulse is slower than the hit itself.
    let ang_dur = duration * 1.5;
    let ang_start = SEGMENT_MS as f64 / 2.0 - ang_dur / 2.0;
    for j in 0..seg.n_ang {
        let t = j as f64 / 8.0;
        let p = spec.ang_peak_dps * haversine(t, ang_start, ang_dur);
        for a in 0..3 {
            seg.ang[a][j] += ang_dir[a] * p;
        }
    }
    seg.add_noise(&mut rng, spec.noise_rms_g);
    Ok((
        seg.finish("simdev-00"),
        Label::synthetic(LabelValue::TrueImpact),
    ))
}

/// Generates a non-contact artifact segment from one of the three families.
/// Deterministic in the seed; the family is drawn from the seed when not
/// forced.
pub fn gen_artifact(spec: &SyntheticSpec) -> Result<(SensorStream, Label)> {
    spec.validate()?;
    if spec.kind != SyntheticKind::Artifact {
        return Err(PipeError::InvalidParameter(
            "gen_artifact called with a non-artifact spec".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let family = spec.artifact_family.unwrap_or_else(|| {
        match rng.gen_range(0..3u8) {
            0 => ArtifactFamily::Burst,
            1 => ArtifactFamily::SpikeTrain,
            _ => ArtifactFamily::BiteRamp,
        }
    });

    let mut seg = SegmentBuilder::new();
    let mid = SEGMENT_MS as f64 / 2.0;
    match family {
        ArtifactFamily::Burst => {
            let carrier_hz = rng.gen_range(150.0..450.0);
            let env_dur = rng.gen_range(20.0..60.0);
            let dir = unit_vector(&mut rng);
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let start = mid - env_dur / 2.0;
            for i in 0..seg.n_lin {
                let t = i as f64;
                let env = haversine(t, start, env_dur);
                let v = spec.peak_g
                    * env
                    * (std::f64::consts::TAU * carrier_hz * t / 1000.0 + phase).sin();
                for a in 0..3 {
                    seg.lin[a][i] += dir[a] * v;
                }
            }
        }
        ArtifactFamily::SpikeTrain => {
            let n_spikes = rng.gen_range(1..=4);
            for _ in 0..n_spikes {
                let pos = rng.gen_range(mid as usize - 60..mid as usize + 60);
                let axis = rng.gen_range(0..3);
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                seg.lin[axis][pos] += sign * spec.peak_g;
            }
        }
        ArtifactFamily::BiteRamp => {
            let rise_ms = rng.gen_range(60.0..150.0);
            let dir = unit_vector(&mut rng);
            let start = mid - rise_ms / 2.0;
            for i in 0..seg.n_lin {
                let t = i as f64;
                // Triangular ramp up and back down plus proportional jitter.
                let x = (t - start) / rise_ms;
                let env = if (0.0..=1.0).contains(&x) {
                    1.0 - (2.0 * x - 1.0).abs()
                } else {
                    0.0
                };
                let jitter: f64 = StandardNormal.sample(&mut rng);
                let v = spec.peak_g * env * (1.0 + 0.05 * jitter);
                for a in 0..3 {
                    seg.lin[a][i] += dir[a] * v;
                }
            }
        }
    }
    seg.add_noise(&mut rng, spec.noise_rms_g);
    Ok((
        seg.finish("simdev-00"),
        Label::synthetic(LabelValue::NonContact),
    ))
}

const RETRY_LIMIT: u32 = 8;

/// Generates a labeled corpus: embeds each synthetic segment in its own
/// quiet stream, runs the trigger over it, and keeps the captured event.
/// Segments that fail to trigger are regenerated with a derived seed, up to
/// a bounded number of retries. Deterministic in the seed; returns exactly
/// `n_impact` true impacts followed by `n_artifact` non-contact events.
pub fn gen_dataset(
    n_impact: usize,
    n_artifact: usize,
    seed: u64,
    cfg: &TriggerConfig,
) -> Result<Vec<(KinematicEvent, Label)>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(n_impact + n_artifact);
    for k in 0..n_impact {
        let ev = capture_one(seed, 1, k as u64, cfg, |event_seed, rng| SyntheticSpec {
            kind: SyntheticKind::Impact,
            peak_g: rng.gen_range(15.0..120.0),
            duration_ms: None,
            ang_peak_dps: rng.gen_range(800.0..2500.0),
            noise_rms_g: 0.3,
            artifact_family: None,
            rng_seed: event_seed,
        })?;
        let mut event = ev.0;
        event.event_id = format!("imp-{k:05}");
        out.push((event, ev.1));
    }
    for k in 0..n_artifact {
        let ev = capture_one(seed, 2, k as u64, cfg, |event_seed, rng| SyntheticSpec {
            kind: SyntheticKind::Artifact,
            peak_g: rng.gen_range(12.0..80.0),
            duration_ms: None,
            ang_peak_dps: 0.0,
            noise_rms_g: 0.3,
            artifact_family: None,
            rng_seed: event_seed,
        })?;
        let mut event = ev.0;
        event.event_id = format!("art-{k:05}");
        out.push((event, ev.1));
    }
    Ok(out)
}

/// Generates, embeds, and captures one labeled event, retrying with a
/// derived seed when the segment fails to trigger.
fn capture_one(
    seed: u64,
    class_tag: u64,
    index: u64,
    cfg: &TriggerConfig,
    make_spec: impl Fn(u64, &mut ChaCha8Rng) -> SyntheticSpec,
) -> Result<(KinematicEvent, Label)> {
    for retry in 0..RETRY_LIMIT {
        let event_seed = derive_event_seed(seed, class_tag | ((retry as u64) << 8), index);
        let mut param_rng = ChaCha8Rng::seed_from_u64(derive_event_seed(event_seed, 7, 0));
        let spec = make_spec(event_seed, &mut param_rng);
        let (segment, label) = match spec.kind {
            SyntheticKind::Impact => gen_impact(&spec)?,
            SyntheticKind::Artifact => gen_artifact(&spec)?,
        };
        let events = run_trigger(&segment, cfg)?;
        if let Some(event) = events.into_iter().next() {
            return Ok((event, label));
        }
    }
    Err(PipeError::Solver(format!(
        "segment {index} failed to trigger after {RETRY_LIMIT} regenerations"
    )))
}
