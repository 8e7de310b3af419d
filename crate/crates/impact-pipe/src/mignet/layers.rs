//! Convolution, pooling, and dense layers with hand-derived backward passes.
//!
//! Layouts are flat row-major f64 buffers:
//! - 1D stage activations: `[sensor][feature][col]` with the same conv bank
//!   shared across the sensor channels;
//! - 2D stage volumes: `[feature][row][col]` over the 6 x n spatial extent.
//!
//! All convolutions use stride 1 and "same" zero padding with odd kernels,
//! so the spatial extent is preserved through the whole stack.

use super::tensor::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Shared-weight 1D convolution bank: weights `[out][in][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub w: Tensor,
    pub b: Vec<f64>,
}

impl Conv1d {
    pub fn init(in_ch: usize, out_ch: usize, kernel: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan_in = (in_ch * kernel) as f64;
        let limit = (1.0 / fan_in).sqrt();
        let n = out_ch * in_ch * kernel;
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-limit..limit)).collect();
        let b = (0..out_ch).map(|_| rng.gen_range(-limit..limit)).collect();
        Conv1d {
            in_ch,
            out_ch,
            kernel,
            w: Tensor::from_vec(&[out_ch, in_ch, kernel], data).unwrap(),
            b,
        }
    }

    /// `x` is `[sensors][in_ch][n]`; returns pre-activations `[sensors][out_ch][n]`.
    pub fn forward(&self, x: &[f64], sensors: usize, n: usize) -> Vec<f64> {
        let pad = (self.kernel - 1) / 2;
        let w = self.w.as_slice();
        let mut out = vec![0.0; sensors * self.out_ch * n];
        for s in 0..sensors {
            let in_base = s * self.in_ch * n;
            let out_base = s * self.out_ch * n;
            for f in 0..self.out_ch {
                let orow = &mut out[out_base + f * n..out_base + (f + 1) * n];
                orow.fill(self.b[f]);
                for c in 0..self.in_ch {
                    let xrow = &x[in_base + c * n..in_base + (c + 1) * n];
                    for dk in 0..self.kernel {
                        let wv = w[(f * self.in_ch + c) * self.kernel + dk];
                        let off = dk as isize - pad as isize;
                        let (o_start, o_end) = valid_range(off, n);
                        let x_start = (o_start as isize + off) as usize;
                        let xr = &xrow[x_start..x_start + (o_end - o_start)];
                        let or = &mut orow[o_start..o_end];
                        for (o, xv) in or.iter_mut().zip(xr.iter()) {
                            *o += wv * xv;
                        }
                    }
                }
            }
        }
        out
    }

    /// Gradients for the forward call: returns (d_input, d_weights, d_bias).
    pub fn backward(
        &self,
        x: &[f64],
        d_out: &[f64],
        sensors: usize,
        n: usize,
    ) -> (Vec<f64>, Tensor, Vec<f64>) {
        let pad = (self.kernel - 1) / 2;
        let w = self.w.as_slice();
        let mut d_x = vec![0.0; sensors * self.in_ch * n];
        let mut d_w = Tensor::zeros(&[self.out_ch, self.in_ch, self.kernel]);
        let mut d_b = vec![0.0; self.out_ch];
        let dw = d_w.as_mut_slice();
        for s in 0..sensors {
            let in_base = s * self.in_ch * n;
            let out_base = s * self.out_ch * n;
            for f in 0..self.out_ch {
                let grow = &d_out[out_base + f * n..out_base + (f + 1) * n];
                d_b[f] += grow.iter().sum::<f64>();
                for c in 0..self.in_ch {
                    let xrow = &x[in_base + c * n..in_base + (c + 1) * n];
                    let dxrow = &mut d_x[in_base + c * n..in_base + (c + 1) * n];
                    for dk in 0..self.kernel {
                        let wi = (f * self.in_ch + c) * self.kernel + dk;
                        let off = dk as isize - pad as isize;
                        let (o_start, o_end) = valid_range(off, n);
                        let x_start = (o_start as isize + off) as usize;
                        let mut acc = 0.0;
                        for (i, o) in (o_start..o_end).enumerate() {
                            let g = grow[o];
                            acc += g * xrow[x_start + i];
                            dxrow[x_start + i] += g * w[wi];
                        }
                        dw[wi] += acc;
                    }
                }
            }
        }
        (d_x, d_w, d_b)
    }
}

/// 2D convolution: weights `[out][in][kh][kw]` over `[in][rows][n]` volumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub w: Tensor,
    pub b: Vec<f64>,
}

impl Conv2d {
    pub fn init(in_ch: usize, out_ch: usize, kernel: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan_in = (in_ch * kernel * kernel) as f64;
        let limit = (1.0 / fan_in).sqrt();
        let n = out_ch * in_ch * kernel * kernel;
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-limit..limit)).collect();
        let b = (0..out_ch).map(|_| rng.gen_range(-limit..limit)).collect();
        Conv2d {
            in_ch,
            out_ch,
            kernel,
            w: Tensor::from_vec(&[out_ch, in_ch, kernel, kernel], data).unwrap(),
            b,
        }
    }

    /// `x` is `[in_ch][rows][n]`; returns pre-activations `[out_ch][rows][n]`.
    pub fn forward(&self, x: &[f64], rows: usize, n: usize) -> Vec<f64> {
        let k = self.kernel;
        let pad = (k - 1) / 2;
        let w = self.w.as_slice();
        let mut out = vec![0.0; self.out_ch * rows * n];
        for f in 0..self.out_ch {
            let f_base = f * rows * n;
            out[f_base..f_base + rows * n].fill(self.b[f]);
            for c in 0..self.in_ch {
                let c_base = c * rows * n;
                for dy in 0..k {
                    let roff = dy as isize - pad as isize;
                    for dx in 0..k {
                        let wv = w[((f * self.in_ch + c) * k + dy) * k + dx];
                        let coff = dx as isize - pad as isize;
                        let (c_start, c_end) = valid_range(coff, n);
                        let width = c_end - c_start;
                        for r in 0..rows {
                            let ri = r as isize + roff;
                            if ri < 0 || ri >= rows as isize {
                                continue;
                            }
                            let x_base = c_base + ri as usize * n + (c_start as isize + coff) as usize;
                            let o_base = f_base + r * n + c_start;
                            let xr = &x[x_base..x_base + width];
                            let or = &mut out[o_base..o_base + width];
                            for (o, xv) in or.iter_mut().zip(xr.iter()) {
                                *o += wv * xv;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn backward(
        &self,
        x: &[f64],
        d_out: &[f64],
        rows: usize,
        n: usize,
    ) -> (Vec<f64>, Tensor, Vec<f64>) {
        let k = self.kernel;
        let pad = (k - 1) / 2;
        let w = self.w.as_slice();
        let mut d_x = vec![0.0; self.in_ch * rows * n];
        let mut d_w = Tensor::zeros(&[self.out_ch, self.in_ch, k, k]);
        let mut d_b = vec![0.0; self.out_ch];
        let dw = d_w.as_mut_slice();
        for f in 0..self.out_ch {
            let f_base = f * rows * n;
            d_b[f] += d_out[f_base..f_base + rows * n].iter().sum::<f64>();
            for c in 0..self.in_ch {
                let c_base = c * rows * n;
                for dy in 0..k {
                    let roff = dy as isize - pad as isize;
                    for dx in 0..k {
                        let wi = ((f * self.in_ch + c) * k + dy) * k + dx;
                        let wv = w[wi];
                        let coff = dx as isize - pad as isize;
                        let (c_start, c_end) = valid_range(coff, n);
                        let width = c_end - c_start;
                        let mut acc = 0.0;
                        for r in 0..rows {
                            let ri = r as isize + roff;
                            if ri < 0 || ri >= rows as isize {
                                continue;
                            }
                            let x_base = c_base + ri as usize * n + (c_start as isize + coff) as usize;
                            let o_base = f_base + r * n + c_start;
                            for i in 0..width {
                                let g = d_out[o_base + i];
                                acc += g * x[x_base + i];
                                d_x[x_base + i] += g * wv;
                            }
                        }
                        dw[wi] += acc;
                    }
                }
            }
        }
        (d_x, d_w, d_b)
    }
}

/// Fully connected layer: weights `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Tensor,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (1.0 / in_dim as f64).sqrt();
        let data: Vec<f64> = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        let b = (0..out_dim).map(|_| rng.gen_range(-limit..limit)).collect();
        Dense {
            in_dim,
            out_dim,
            w: Tensor::from_vec(&[out_dim, in_dim], data).unwrap(),
            b,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let w = self.w.as_slice();
        (0..self.out_dim)
            .map(|o| {
                let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
                self.b[o]
                    + row
                        .iter()
                        .zip(x.iter())
                        .map(|(wv, xv)| wv * xv)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn backward(&self, x: &[f64], d_out: &[f64]) -> (Vec<f64>, Tensor, Vec<f64>) {
        let w = self.w.as_slice();
        let mut d_x = vec![0.0; self.in_dim];
        let mut d_w = Tensor::zeros(&[self.out_dim, self.in_dim]);
        let dw = d_w.as_mut_slice();
        for o in 0..self.out_dim {
            let g = d_out[o];
            for i in 0..self.in_dim {
                dw[o * self.in_dim + i] += g * x[i];
                d_x[i] += g * w[o * self.in_dim + i];
            }
        }
        (d_x, d_w, d_out.to_vec())
    }
}

fn valid_range(off: isize, n: usize) -> (usize, usize) {
    let start = if off < 0 { (-off) as usize } else { 0 };
    let end = if off > 0 { n - off as usize } else { n };
    (start, end)
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.max(0.0)).collect()
}

pub fn relu_backward(pre: &[f64], d_act: &[f64]) -> Vec<f64> {
    pre.iter()
        .zip(d_act.iter())
        .map(|(p, g)| if *p > 0.0 { *g } else { 0.0 })
        .collect()
}

/// Spatial mean per feature map: `[f][rows][n]` -> `[f]`.
pub fn global_average_pool(x: &[f64], features: usize, rows: usize, n: usize) -> Vec<f64> {
    let area = (rows * n) as f64;
    (0..features)
        .map(|f| x[f * rows * n..(f + 1) * rows * n].iter().sum::<f64>() / area)
        .collect()
}

pub fn global_average_pool_backward(
    d_pooled: &[f64],
    features: usize,
    rows: usize,
    n: usize,
) -> Vec<f64> {
    let area = (rows * n) as f64;
    let mut d_x = vec![0.0; features * rows * n];
    for f in 0..features {
        let g = d_pooled[f] / area;
        d_x[f * rows * n..(f + 1) * rows * n].fill(g);
    }
    d_x
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    /// Central finite differences on a scalar function of a parameter slice.
    fn finite_diff(params: &mut [f64], loss: &mut dyn FnMut(&[f64]) -> f64) -> Vec<f64> {
        let eps = 1e-5;
        let mut grad = vec![0.0; params.len()];
        for i in 0..params.len() {
            let keep = params[i];
            params[i] = keep + eps;
            let up = loss(params);
            params[i] = keep - eps;
            let down = loss(params);
            params[i] = keep;
            grad[i] = (up - down) / (2.0 * eps);
        }
        grad
    }

    fn assert_close(analytic: &[f64], numeric: &[f64], what: &str) {
        for (i, (a, n)) in analytic.iter().zip(numeric.iter()).enumerate() {
            let denom = a.abs().max(n.abs()).max(1e-6);
            let rel = (a - n).abs() / denom;
            assert!(rel < 1e-4, "{what}[{i}]: analytic {a} vs numeric {n}");
        }
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    // Per-layer gradient checks: the loss is the weighted sum of the layer
    // output against a fixed random co-vector, so d_out is known exactly.

    #[test]
    fn conv1d_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (sensors, n, in_ch, out_ch, k) = (2, 9, 2, 3, 5);
        let layer = Conv1d::init(in_ch, out_ch, k, &mut rng);
        let x = rand_vec(&mut rng, sensors * in_ch * n);
        let co = rand_vec(&mut rng, sensors * out_ch * n);
        let loss_of = |l: &Conv1d, x: &[f64]| -> f64 {
            l.forward(x, sensors, n)
                .iter()
                .zip(co.iter())
                .map(|(o, c)| o * c)
                .sum()
        };
        let (d_x, d_w, d_b) = layer.backward(&x, &co, sensors, n);

        let mut xp = x.clone();
        let num_dx = finite_diff(&mut xp, &mut |p| loss_of(&layer, p));
        assert_close(&d_x, &num_dx, "conv1d d_input");

        let mut lw = layer.clone();
        let mut wbuf = lw.w.as_slice().to_vec();
        let num_dw = finite_diff(&mut wbuf, &mut |p| {
            lw.w.as_mut_slice().copy_from_slice(p);
            loss_of(&lw, &x)
        });
        assert_close(d_w.as_slice(), &num_dw, "conv1d d_w");

        let mut lb = layer.clone();
        let mut bbuf = lb.b.clone();
        let num_db = finite_diff(&mut bbuf, &mut |p| {
            lb.b.copy_from_slice(p);
            loss_of(&lb, &x)
        });
        assert_close(&d_b, &num_db, "conv1d d_b");
    }

    #[test]
    fn conv2d_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (rows, n, in_ch, out_ch) = (3, 7, 2, 2);
        let layer = Conv2d::init(in_ch, out_ch, 3, &mut rng);
        let x = rand_vec(&mut rng, in_ch * rows * n);
        let co = rand_vec(&mut rng, out_ch * rows * n);
        let loss_of = |l: &Conv2d, x: &[f64]| -> f64 {
            l.forward(x, rows, n)
                .iter()
                .zip(co.iter())
                .map(|(o, c)| o * c)
                .sum()
        };
        let (d_x, d_w, d_b) = layer.backward(&x, &co, rows, n);

        let mut xp = x.clone();
        let num_dx = finite_diff(&mut xp, &mut |p| loss_of(&layer, p));
        assert_close(&d_x, &num_dx, "conv2d d_input");

        let mut lw = layer.clone();
        let mut wbuf = lw.w.as_slice().to_vec();
        let num_dw = finite_diff(&mut wbuf, &mut |p| {
            lw.w.as_mut_slice().copy_from_slice(p);
            loss_of(&lw, &x)
        });
        assert_close(d_w.as_slice(), &num_dw, "conv2d d_w");

        let mut lb = layer.clone();
        let mut bbuf = lb.b.clone();
        let num_db = finite_diff(&mut bbuf, &mut |p| {
            lb.b.copy_from_slice(p);
            loss_of(&lb, &x)
        });
        assert_close(&d_b, &num_db, "conv2d d_b");
    }

    #[test]
    fn dense_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = Dense::init(5, 2, &mut rng);
        let x = rand_vec(&mut rng, 5);
        let co = rand_vec(&mut rng, 2);
        let loss_of = |l: &Dense, x: &[f64]| -> f64 {
            l.forward(x).iter().zip(co.iter()).map(|(o, c)| o * c).sum()
        };
        let (d_x, d_w, _d_b) = layer.backward(&x, &co);

        let mut xp = x.clone();
        let num_dx = finite_diff(&mut xp, &mut |p| loss_of(&layer, p));
        assert_close(&d_x, &num_dx, "dense d_input");

        let mut lw = layer.clone();
        let mut wbuf = lw.w.as_slice().to_vec();
        let num_dw = finite_diff(&mut wbuf, &mut |p| {
            lw.w.as_mut_slice().copy_from_slice(p);
            loss_of(&lw, &x)
        });
        assert_close(d_w.as_slice(), &num_dw, "dense d_w");
    }

    #[test]
    fn gap_of_constant_map_is_that_constant() {
        let x = vec![0.37; 2 * 3 * 4];
        let pooled = global_average_pool(&x, 2, 3, 4);
        for v in pooled {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (features, rows, n) = (3, 2, 5);
        let x = rand_vec(&mut rng, features * rows * n);
        let co = rand_vec(&mut rng, features);
        let d_x = global_average_pool_backward(&co, features, rows, n);
        let mut xp = x.clone();
        let num_dx = finite_diff(&mut xp, &mut |p| {
            global_average_pool(p, features, rows, n)
                .iter()
                .zip(co.iter())
                .map(|(o, c)| o * c)
                .sum()
        });
        assert_close(&d_x, &num_dx, "gap d_input");
    }

    #[test]
    fn relu_gradient_gates_on_preactivation() {
        let pre = vec![-1.0, 0.0, 2.0];
        let d = relu_backward(&pre, &[1.0, 1.0, 1.0]);
        assert_eq!(d, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn softmax_is_a_simplex_point() {
        let p = softmax(&[3.0, -1.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| *v >= 0.0));
        let q = softmax(&[1000.0, 999.0]);
        assert!(q[0].is_finite() && q[1].is_finite());
    }
}
