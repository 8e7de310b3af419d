//! The convolutional impact classifier.
//!
//! Per-channel 1D convolution banks extract waveform features from each of
//! the six sensor channels with shared weights; the per-channel feature
//! maps are then stacked into a volume whose rows are the sensor channels,
//! and 2D convolutions fuse information across channels. Global average
//! pooling and a small dense layer produce the two-class softmax. The
//! backward pass is derived by hand; no autodiff framework is involved.

mod layers;
mod loss;
mod model_io;
mod sweep;
mod tensor;
mod train;

pub use layers::{
    global_average_pool, global_average_pool_backward, relu, relu_backward, softmax, Conv1d,
    Conv2d, Dense,
};
pub use loss::{clamp_warning_count, weighted_cross_entropy};
pub use model_io::{load_model, model_fingerprint, model_to_string, save_model};
pub use sweep::{run_sweep, SweepConfig, SweepStep};

pub use self::backward as backprop;
pub use tensor::Tensor;
pub use train::{mean_weighted_loss, sgd_step, train, TrainConfig};

use crate::dataset::ClassWeights;
use crate::error::{PipeError, Result};
use crate::kinematics::{LabelValue, ProcessedWindow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Class order of the softmax output.
pub const CLASSES: [LabelValue; 2] = [LabelValue::TrueImpact, LabelValue::NonContact];

pub fn class_index(value: LabelValue) -> usize {
    match value {
        LabelValue::TrueImpact => 0,
        LabelValue::NonContact => 1,
    }
}

/// Final stage after the convolutional stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    /// Global average pooling, then dense to 2 classes.
    Gap,
    /// Flatten the full volume, then dense to 2 classes.
    Flatten,
}

impl HeadKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HeadKind::Gap => "gap",
            HeadKind::Flatten => "flatten",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gap" => Ok(HeadKind::Gap),
            "flatten" => Ok(HeadKind::Flatten),
            other => Err(PipeError::InvalidParameter(format!(
                "unknown head '{other}' (expected gap|flatten)"
            ))),
        }
    }
}

/// Layer counts and sizes, the descriptor persisted with every model.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    /// 1D stage: (filters, kernel) per layer, applied per sensor channel.
    pub conv1d: Vec<(usize, usize)>,
    /// 2D stage: (filters, kernel) per layer over the stacked volume.
    pub conv2d: Vec<(usize, usize)>,
    pub head: HeadKind,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            conv1d: vec![(16, 7), (32, 5)],
            conv2d: vec![(32, 3)],
            head: HeadKind::Gap,
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.conv1d.is_empty() || self.conv2d.is_empty() {
            return Err(PipeError::InvalidParameter(
                "architecture needs at least one 1D and one 2D conv layer".into(),
            ));
        }
        for &(f, k) in self.conv1d.iter().chain(self.conv2d.iter()) {
            if f == 0 || k == 0 || k % 2 == 0 {
                return Err(PipeError::InvalidParameter(format!(
                    "conv layer ({f} filters, kernel {k}): filters must be positive and kernels odd"
                )));
            }
        }
        Ok(())
    }

    /// `16:7,32:5` notation used by model files and configs.
    pub fn format_stage(stage: &[(usize, usize)]) -> String {
        stage
            .iter()
            .map(|(f, k)| format!("{f}:{k}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_stage(text: &str) -> Result<Vec<(usize, usize)>> {
        text.split(',')
            .map(|part| {
                let (f, k) = part.split_once(':').ok_or_else(|| {
                    PipeError::InvalidParameter(format!(
                        "conv stage entry '{part}' must be filters:kernel"
                    ))
                })?;
                let f = f.trim().parse().map_err(|_| {
                    PipeError::InvalidParameter(format!("bad filter count '{f}'"))
                })?;
                let k = k.trim().parse().map_err(|_| {
                    PipeError::InvalidParameter(format!("bad kernel size '{k}'"))
                })?;
                Ok((f, k))
            })
            .collect()
    }
}

/// The full parameter set plus the descriptor needed to rebuild it.
#[derive(Debug, Clone, PartialEq)]
pub struct MiGNetModel {
    pub arch: Architecture,
    /// Input geometry: always 6 rows; columns on the linear-rate grid.
    pub n_rows: usize,
    pub n_cols: usize,
    pub conv1d: Vec<Conv1d>,
    pub conv2d: Vec<Conv2d>,
    pub dense: Dense,
    /// Seed used at initialization, kept for provenance.
    pub init_seed: u64,
    /// Bumped on every parameter update; forward caches are pinned to it.
    stamp: u64,
}

impl MiGNetModel {
    /// Builds a model with fan-in-scaled uniform init, deterministic in the
    /// seed.
    pub fn init(arch: &Architecture, n_cols: usize, seed: u64) -> Result<Self> {
        arch.validate()?;
        if n_cols == 0 {
            return Err(PipeError::InvalidParameter("n_cols must be positive".into()));
        }
        let n_rows = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut conv1d = Vec::new();
        let mut in_ch = 1;
        for &(f, k) in &arch.conv1d {
            conv1d.push(Conv1d::init(in_ch, f, k, &mut rng));
            in_ch = f;
        }
        let mut conv2d = Vec::new();
        let mut c = in_ch;
        for &(f, k) in &arch.conv2d {
            conv2d.push(Conv2d::init(c, f, k, &mut rng));
            c = f;
        }
        let dense_in = match arch.head {
            HeadKind::Gap => c,
            HeadKind::Flatten => c * n_rows * n_cols,
        };
        let dense = Dense::init(dense_in, 2, &mut rng);
        Ok(MiGNetModel {
            arch: arch.clone(),
            n_rows,
            n_cols,
            conv1d,
            conv2d,
            dense,
            init_seed: seed,
            stamp: 0,
        })
    }

    pub fn stamp(&self) -> u64 {
        self.stamp
    }

    pub(crate) fn bump_stamp(&mut self) {
        self.stamp += 1;
    }

    /// Total trainable parameter count.
    pub fn param_count(&self) -> usize {
        let c1: usize = self
            .conv1d
            .iter()
            .map(|l| l.w.numel() + l.b.len())
            .sum();
        let c2: usize = self
            .conv2d
            .iter()
            .map(|l| l.w.numel() + l.b.len())
            .sum();
        c1 + c2 + self.dense.w.numel() + self.dense.b.len()
    }

    pub fn all_finite(&self) -> bool {
        self.conv1d
            .iter()
            .all(|l| l.w.is_finite() && l.b.iter().all(|v| v.is_finite()))
            && self
                .conv2d
                .iter()
                .all(|l| l.w.is_finite() && l.b.iter().all(|v| v.is_finite()))
            && self.dense.w.is_finite()
            && self.dense.b.iter().all(|v| v.is_finite())
    }
}

/// Intermediate activations kept for the backward pass, pinned to the model
/// state that produced them.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    stamp: u64,
    n_cols: usize,
    input: Vec<f64>,
    conv1d_pre: Vec<Vec<f64>>,
    stacked: Vec<f64>,
    conv2d_pre: Vec<Vec<f64>>,
    head_vec: Vec<f64>,
    probs: [f64; 2],
}

impl ForwardCache {
    pub fn probabilities(&self) -> [f64; 2] {
        self.probs
    }
}

/// Runs the network on a normalized window and returns the class
/// probabilities with the cache needed for backpropagation.
pub fn forward(model: &MiGNetModel, window: &ProcessedWindow) -> Result<([f64; 2], ForwardCache)> {
    if !window.normalized {
        return Err(PipeError::InvalidParameter(
            "classifier input must be a normalized window".into(),
        ));
    }
    if window.data.len() != model.n_rows || window.n_cols() != model.n_cols {
        return Err(PipeError::Shape(format!(
            "window is {}x{}, model expects {}x{}",
            window.data.len(),
            window.n_cols(),
            model.n_rows,
            model.n_cols
        )));
    }
    let sensors = model.n_rows;
    let n = model.n_cols;

    // [sensor][1][n]
    let mut input = Vec::with_capacity(sensors * n);
    for row in &window.data {
        input.extend_from_slice(row);
    }

    let mut conv1d_pre = Vec::with_capacity(model.conv1d.len());
    let mut act = input.clone();
    for layer in &model.conv1d {
        let pre = layer.forward(&act, sensors, n);
        act = relu(&pre);
        conv1d_pre.push(pre);
    }

    // Stack [sensor][f][n] -> [f][sensor][n]: rows of the 2D stage are the
    // sensor channels.
    let f_stack = model.conv1d.last().unwrap().out_ch;
    let mut stacked = vec![0.0; f_stack * sensors * n];
    for s in 0..sensors {
        for f in 0..f_stack {
            let src = &act[(s * f_stack + f) * n..(s * f_stack + f + 1) * n];
            stacked[(f * sensors + s) * n..(f * sensors + s + 1) * n].copy_from_slice(src);
        }
    }

    let mut conv2d_pre = Vec::with_capacity(model.conv2d.len());
    let mut vol = stacked.clone();
    for layer in &model.conv2d {
        let pre = layer.forward(&vol, sensors, n);
        vol = relu(&pre);
        conv2d_pre.push(pre);
    }

    let f_last = model.conv2d.last().unwrap().out_ch;
    let head_vec = match model.arch.head {
        HeadKind::Gap => global_average_pool(&vol, f_last, sensors, n),
        HeadKind::Flatten => vol,
    };
    let logits = model.dense.forward(&head_vec);
    let p = softmax(&logits);
    let probs = [p[0], p[1]];

    Ok((
        probs,
        ForwardCache {
            stamp: model.stamp,
            n_cols: n,
            input,
            conv1d_pre,
            stacked,
            conv2d_pre,
            head_vec,
            probs,
        },
    ))
}

/// Gradient of every parameter tensor, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv1d: Vec<(Tensor, Vec<f64>)>,
    pub conv2d: Vec<(Tensor, Vec<f64>)>,
    pub dense: (Tensor, Vec<f64>),
}

impl Gradients {
    pub fn zeros_like(model: &MiGNetModel) -> Self {
        Gradients {
            conv1d: model
                .conv1d
                .iter()
                .map(|l| (Tensor::zeros(l.w.shape()), vec![0.0; l.b.len()]))
                .collect(),
            conv2d: model
                .conv2d
                .iter()
                .map(|l| (Tensor::zeros(l.w.shape()), vec![0.0; l.b.len()]))
                .collect(),
            dense: (
                Tensor::zeros(model.dense.w.shape()),
                vec![0.0; model.dense.b.len()],
            ),
        }
    }

    /// self += other, elementwise.
    pub fn add_assign(&mut self, other: &Gradients) {
        let add = |a: &mut Tensor, b: &Tensor| {
            for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x += y;
            }
        };
        let addv = |a: &mut Vec<f64>, b: &[f64]| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        };
        for (mine, theirs) in self.conv1d.iter_mut().zip(other.conv1d.iter()) {
            add(&mut mine.0, &theirs.0);
            addv(&mut mine.1, &theirs.1);
        }
        for (mine, theirs) in self.conv2d.iter_mut().zip(other.conv2d.iter()) {
            add(&mut mine.0, &theirs.0);
            addv(&mut mine.1, &theirs.1);
        }
        add(&mut self.dense.0, &other.dense.0);
        addv(&mut self.dense.1, &other.dense.1);
    }

    /// self *= factor, elementwise.
    pub fn scale(&mut self, factor: f64) {
        self.for_each_mut(|v| *v *= factor);
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for (w, b) in self.conv1d.iter_mut().chain(self.conv2d.iter_mut()) {
            w.as_mut_slice().iter_mut().for_each(&mut f);
            b.iter_mut().for_each(&mut f);
        }
        self.dense.0.as_mut_slice().iter_mut().for_each(&mut f);
        self.dense.1.iter_mut().for_each(&mut f);
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        let mut check = |v: &f64| ok &= v.is_finite();
        for (w, b) in self.conv1d.iter().chain(self.conv2d.iter()) {
            w.as_slice().iter().for_each(&mut check);
            b.iter().for_each(&mut check);
        }
        self.dense.0.as_slice().iter().for_each(&mut check);
        self.dense.1.iter().for_each(&mut check);
        ok
    }
}

/// Backpropagates the weighted cross-entropy loss through the cache,
/// producing gradients for every parameter tensor. The cache must come from
/// a forward call on the current model state.
pub fn backward(
    model: &MiGNetModel,
    cache: &ForwardCache,
    label: LabelValue,
    weights: &ClassWeights,
) -> Result<Gradients> {
    if cache.stamp != model.stamp {
        return Err(PipeError::InvalidState(
            "forward cache is stale: the model has been updated since it was computed".into(),
        ));
    }
    if cache.n_cols != model.n_cols {
        return Err(PipeError::Shape(format!(
            "cache built for {} columns, model expects {}",
            cache.n_cols, model.n_cols
        )));
    }
    let sensors = model.n_rows;
    let n = model.n_cols;
    let w_label = match label {
        LabelValue::TrueImpact => weights.w_true,
        LabelValue::NonContact => weights.w_false,
    };

    // d(loss)/d(logit_j) for loss = -w * log p_label.
    let li = class_index(label);
    let mut g_logits = vec![0.0; 2];
    for j in 0..2 {
        let y = if j == li { 1.0 } else { 0.0 };
        g_logits[j] = w_label * (cache.probs[j] - y);
    }

    let (d_head, d_dense_w, d_dense_b) = model.dense.backward(&cache.head_vec, &g_logits);

    let f_last = model.conv2d.last().unwrap().out_ch;
    let mut d_vol = match model.arch.head {
        HeadKind::Gap => global_average_pool_backward(&d_head, f_last, sensors, n),
        HeadKind::Flatten => d_head,
    };

    let mut conv2d_grads: Vec<(Tensor, Vec<f64>)> = Vec::with_capacity(model.conv2d.len());
    for m in (0..model.conv2d.len()).rev() {
        let d_pre = relu_backward(&cache.conv2d_pre[m], &d_vol);
        let input_owned;
        let input: &[f64] = if m == 0 {
            &cache.stacked
        } else {
            input_owned = relu(&cache.conv2d_pre[m - 1]);
            &input_owned
        };
        let (d_in, d_w, d_b) = model.conv2d[m].backward(input, &d_pre, sensors, n);
        conv2d_grads.push((d_w, d_b));
        d_vol = d_in;
    }
    conv2d_grads.reverse();

    // Unstack [f][sensor][n] -> [sensor][f][n].
    let f_stack = model.conv1d.last().unwrap().out_ch;
    let mut d_act1d = vec![0.0; sensors * f_stack * n];
    for f in 0..f_stack {
        for s in 0..sensors {
            let src = &d_vol[(f * sensors + s) * n..(f * sensors + s + 1) * n];
            d_act1d[(s * f_stack + f) * n..(s * f_stack + f + 1) * n].copy_from_slice(src);
        }
    }

    let mut conv1d_grads: Vec<(Tensor, Vec<f64>)> = Vec::with_capacity(model.conv1d.len());
    for l in (0..model.conv1d.len()).rev() {
        let d_pre = relu_backward(&cache.conv1d_pre[l], &d_act1d);
        let input_owned;
        let input: &[f64] = if l == 0 {
            &cache.input
        } else {
            input_owned = relu(&cache.conv1d_pre[l - 1]);
            &input_owned
        };
        let (d_in, d_w, d_b) = model.conv1d[l].backward(input, &d_pre, sensors, n);
        conv1d_grads.push((d_w, d_b));
        d_act1d = d_in;
    }
    conv1d_grads.reverse();

    Ok(Gradients {
        conv1d: conv1d_grads,
        conv2d: conv2d_grads,
        dense: (d_dense_w, d_dense_b),
    })
}

/// Applies the classifier: argmax of the forward probabilities. The score
/// is the probability of a true impact; an exact tie resolves to
/// non-contact.
pub fn predict(model: &MiGNetModel, window: &ProcessedWindow) -> Result<(LabelValue, f64)> {
    let (probs, _) = forward(model, window)?;
    let label = if probs[0] > probs[1] {
        LabelValue::TrueImpact
    } else {
        LabelValue::NonContact
    };
    Ok((label, probs[0]))
}
