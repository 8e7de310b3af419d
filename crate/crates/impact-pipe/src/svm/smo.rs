//! C-SVC dual solver: sequential minimal optimization.
//!
//! Platt-style working-pair selection with an error cache and deterministic
//! scan order, so a given (data, kernel, C) always produces the same model.
//! The full kernel matrix is cached for small problems and computed row by
//! row above that.

use crate::error::{PipeError, Result};
use crate::kinematics::LabelValue;

/// Kernel of the decision function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
    /// RBF with gamma resolved to 1 / n_features at training time.
    RbfAuto,
}

impl Kernel {
    fn resolve(self, dims: usize) -> Kernel {
        match self {
            Kernel::RbfAuto => Kernel::Rbf {
                gamma: 1.0 / dims.max(1) as f64,
            },
            other => other,
        }
    }

    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            Kernel::RbfAuto => unreachable!("RbfAuto must be resolved before evaluation"),
        }
    }
}

/// KKT tolerance at convergence.
const TOL: f64 = 1e-3;
/// Minimum meaningful alpha change.
const EPS: f64 = 1e-12;
/// Cache the full kernel matrix up to this many points.
const FULL_MATRIX_LIMIT: usize = 2048;

/// Trained C-SVC: support vectors with their signed dual coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// alpha_i * y_i per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    /// Dual objective at convergence.
    pub dual_objective: f64,
    /// Set when the model cannot beat chance on its own training data.
    pub degenerate: bool,
    pub train_accuracy: f64,
}

struct KernelSource<'a> {
    kernel: Kernel,
    x: &'a [Vec<f64>],
    full: Option<Vec<f64>>,
    n: usize,
}

impl<'a> KernelSource<'a> {
    fn new(kernel: Kernel, x: &'a [Vec<f64>]) -> Self {
        let n = x.len();
        let full = if n <= FULL_MATRIX_LIMIT {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = kernel.eval(&x[i], &x[j]);
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
            Some(m)
        } else {
            None
        };
        KernelSource { kernel, x, full, n }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.full {
            Some(m) => m[i * self.n + j],
            None => self.kernel.eval(&self.x[i], &self.x[j]),
        }
    }

    /// K(i, .) as an owned row.
    fn row(&self, i: usize) -> Vec<f64> {
        match &self.full {
            Some(m) => m[i * self.n..(i + 1) * self.n].to_vec(),
            None => (0..self.n).map(|j| self.kernel.eval(&self.x[i], &self.x[j])).collect(),
        }
    }
}

struct Solver<'a> {
    k: KernelSource<'a>,
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    // E_i = f(x_i) - y_i, maintained incrementally.
    err: Vec<f64>,
    bias: f64,
    steps: u64,
    max_steps: u64,
}

impl<'a> Solver<'a> {
    fn non_bound(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;

        let (lo, hi) = if s < 0.0 {
            ((a2_old - a1_old).max(0.0), (self.c + a2_old - a1_old).min(self.c))
        } else {
            ((a2_old + a1_old - self.c).max(0.0), (a2_old + a1_old).min(self.c))
        };
        if lo >= hi {
            return false;
        }

        let k11 = self.k.entry(i1, i1);
        let k12 = self.k.entry(i1, i2);
        let k22 = self.k.entry(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2 = if eta > 0.0 {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Flat or concave direction (duplicate or degenerate points):
            // evaluate the objective at both clip ends and take the better.
            let f1 = y1 * e1 - a1_old * k11 - s * a2_old * k12;
            let f2 = y2 * e2 - s * a1_old * k12 - a2_old * k22;
            let l1 = a1_old + s * (a2_old - lo);
            let h1 = a1_old + s * (a2_old - hi);
            let obj_lo =
                l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12;
            let obj_hi =
                h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12;
            if obj_lo < obj_hi - EPS {
                lo
            } else if obj_lo > obj_hi + EPS {
                hi
            } else {
                return false;
            }
        };
        if (a2 - a2_old).abs() < EPS * (a2 + a2_old + EPS) {
            return false;
        }
        // Snap to the box to keep bound bookkeeping exact.
        if a2 < 1e-10 {
            a2 = 0.0;
        } else if a2 > self.c - 1e-10 {
            a2 = self.c;
        }
        let a1 = a1_old + s * (a2_old - a2);
        let a1 = if a1 < 1e-10 {
            0.0
        } else if a1 > self.c - 1e-10 {
            self.c
        } else {
            a1
        };

        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        let b_old = self.bias;
        let b1 = b_old - (e1 + d1 * k11 + d2 * k12);
        let b2 = b_old - (e2 + d1 * k12 + d2 * k22);
        self.bias = if a1 > 0.0 && a1 < self.c {
            b1
        } else if a2 > 0.0 && a2 < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };

        self.alpha[i1] = a1;
        self.alpha[i2] = a2;

        let row1 = self.k.row(i1);
        let row2 = self.k.row(i2);
        let db = self.bias - b_old;
        for i in 0..self.k.n {
            self.err[i] += d1 * row1[i] + d2 * row2[i] + db;
        }
        // Pin the updated pair's errors to their definition when interior.
        if self.non_bound(i1) {
            self.err[i1] = 0.0;
        }
        if self.non_bound(i2) {
            self.err[i2] = 0.0;
        }
        self.steps += 1;
        true
    }

    fn examine(&mut self, i2: usize) -> Result<bool> {
        if self.steps >= self.max_steps {
            let violators = (0..self.k.n).filter(|&i| self.violates_kkt(i)).count();
            return Err(PipeError::Solver(format!(
                "SMO did not converge within {} steps ({} KKT violators remain, tol {TOL})",
                self.max_steps, violators
            )));
        }
        let y2 = self.y[i2];
        let e2 = self.err[i2];
        let r2 = e2 * y2;
        if !((r2 < -TOL && self.alpha[i2] < self.c) || (r2 > TOL && self.alpha[i2] > 0.0)) {
            return Ok(false);
        }
        // Second-choice heuristic: largest |E1 - E2| among non-bound points.
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.k.n {
            if self.non_bound(i) {
                let gap = (self.err[i] - e2).abs();
                if best.map(|(_, g)| gap > g).unwrap_or(true) {
                    best = Some((i, gap));
                }
            }
        }
        if let Some((i1, _)) = best {
            if self.take_step(i1, i2) {
                return Ok(true);
            }
        }
        // Deterministic fallback scans, non-bound first, then everything.
        for offset in 0..self.k.n {
            let i1 = (i2 + 1 + offset) % self.k.n;
            if self.non_bound(i1) && self.take_step(i1, i2) {
                return Ok(true);
            }
        }
        for offset in 0..self.k.n {
            let i1 = (i2 + 1 + offset) % self.k.n;
            if self.take_step(i1, i2) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.err[i] * self.y[i];
        (r < -TOL && self.alpha[i] < self.c) || (r > TOL && self.alpha[i] > 0.0)
    }
}

/// Trains a C-SVC to the KKT tolerance. Inputs must already be standardized;
/// labels are +1 / -1.
pub fn train_svm(x: &[Vec<f64>], y: &[f64], kernel: Kernel, c: f64) -> Result<SvmModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(PipeError::InvalidParameter(format!(
            "training table has {} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if !(c > 0.0) {
        return Err(PipeError::InvalidParameter(format!(
            "C must be positive, got {c}"
        )));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(PipeError::Shape("ragged or empty feature rows".into()));
    }
    let n_pos = y.iter().filter(|v| **v > 0.0).count();
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(PipeError::InvalidParameter(
            "labels must be +1 or -1".into(),
        ));
    }
    if n_pos == 0 || n_pos == y.len() {
        return Err(PipeError::InvalidParameter(
            "training data needs at least one point per class".into(),
        ));
    }

    let kernel = kernel.resolve(d);
    let n = x.len();
    let mut solver = Solver {
        k: KernelSource::new(kernel, x),
        y,
        c,
        alpha: vec![0.0; n],
        err: y.iter().map(|v| -v).collect(),
        bias: 0.0,
        steps: 0,
        max_steps: 50_000 + 500 * n as u64,
    };

    let mut examine_all = true;
    loop {
        let mut changed = 0usize;
        if examine_all {
            for i in 0..n {
                changed += solver.examine(i)? as usize;
            }
        } else {
            for i in 0..n {
                if solver.non_bound(i) {
                    changed += solver.examine(i)? as usize;
                }
            }
        }
        if examine_all {
            if changed == 0 {
                break;
            }
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }

    // Dual objective over the support set.
    let sv_idx: Vec<usize> = (0..n).filter(|&i| solver.alpha[i] > 0.0).collect();
    let mut quad = 0.0;
    for &i in &sv_idx {
        for &j in &sv_idx {
            quad += solver.alpha[i] * solver.alpha[j] * y[i] * y[j] * solver.k.entry(i, j);
        }
    }
    let dual_objective = solver.alpha.iter().sum::<f64>() - 0.5 * quad;

    let support_vectors: Vec<Vec<f64>> = sv_idx.iter().map(|&i| x[i].clone()).collect();
    let dual_coefs: Vec<f64> = sv_idx.iter().map(|&i| solver.alpha[i] * y[i]).collect();
    let bias = solver.bias;

    let model = SvmModel {
        kernel,
        c,
        support_vectors,
        dual_coefs,
        bias,
        dual_objective,
        degenerate: false,
        train_accuracy: 0.0,
    };
    let mut correct = 0usize;
    for (xi, yi) in x.iter().zip(y.iter()) {
        let (pred, _) = predict_svm(&model, xi)?;
        let truth = if *yi > 0.0 {
            LabelValue::TrueImpact
        } else {
            LabelValue::NonContact
        };
        if pred == truth {
            correct += 1;
        }
    }
    let train_accuracy = correct as f64 / n as f64;
    Ok(SvmModel {
        train_accuracy,
        degenerate: train_accuracy <= 0.5,
        ..model
    })
}

/// Decision function: sign picks the class, an exact zero resolves to
/// non-contact.
pub fn predict_svm(model: &SvmModel, x: &[f64]) -> Result<(LabelValue, f64)> {
    if model
        .support_vectors
        .first()
        .map(|sv| sv.len() != x.len())
        .unwrap_or(false)
    {
        return Err(PipeError::Shape(format!(
            "feature vector of length {} against support vectors of length {}",
            x.len(),
            model.support_vectors[0].len()
        )));
    }
    let f = model
        .support_vectors
        .iter()
        .zip(model.dual_coefs.iter())
        .map(|(sv, coef)| coef * model.kernel.eval(sv, x))
        .sum::<f64>()
        + model.bias;
    let label = if f > 0.0 {
        LabelValue::TrueImpact
    } else {
        LabelValue::NonContact
    };
    Ok((label, f))
}

/// Dual feasibility residuals: (max bound violation, |sum alpha_i y_i|).
pub fn dual_feasibility(model: &SvmModel) -> (f64, f64) {
    let mut bound = 0.0_f64;
    let mut balance = 0.0;
    for coef in &model.dual_coefs {
        let alpha = coef.abs();
        bound = bound.max((-alpha).max(alpha - model.c));
        balance += coef;
    }
    (bound.max(0.0), balance.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_maximum_margin_is_analytic() {
        // Points (-1, 0) and (1, 0): w = (1, 0), b = 0, margin 2,
        // objective 1 - 0.5*|w|^2 = 0.5.
        let x = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        let y = vec![-1.0, 1.0];
        let m = train_svm(&x, &y, Kernel::Linear, 1000.0).unwrap();
        // Linear kernel: w = sum coef * sv.
        let mut w = vec![0.0, 0.0];
        for (sv, coef) in m.support_vectors.iter().zip(&m.dual_coefs) {
            w[0] += coef * sv[0];
            w[1] += coef * sv[1];
        }
        assert!((w[0] - 1.0).abs() < 1e-3, "w0 {}", w[0]);
        assert!(w[1].abs() < 1e-3);
        assert!(m.bias.abs() < 1e-3, "bias {}", m.bias);
        assert!((m.dual_objective - 0.5).abs() < 1e-3);
        let (_, f) = predict_svm(&m, &[1.0, 0.0]).unwrap();
        assert!((f - 1.0).abs() < 1e-3);
    }

    #[test]
    fn identical_points_with_mixed_labels_degenerate_but_no_error() {
        let x = vec![vec![1.0, 1.0]; 4];
        let y = vec![1.0, -1.0, 1.0, -1.0];
        let m = train_svm(&x, &y, Kernel::Linear, 1.0).unwrap();
        assert!(m.degenerate);
        assert!(m.train_accuracy <= 0.5);
    }

    #[test]
    fn xor_is_separable_with_rbf() {
        let x = vec![
            vec![1.0, 1.0],
            vec![-1.0, -1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
        ];
        let y = vec![1.0, 1.0, -1.0, -1.0];
        let m = train_svm(&x, &y, Kernel::Rbf { gamma: 1.0 }, 10.0).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (_, f) = predict_svm(&m, xi).unwrap();
            assert!(f * yi > 0.0, "point {xi:?} misclassified (f={f})");
        }
        assert_eq!(m.train_accuracy, 1.0);
    }

    #[test]
    fn dual_constraints_hold_at_convergence() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64) / 10.0 - 1.0, ((i * 7) % 13) as f64 / 13.0])
            .collect();
        let y: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let m = train_svm(&x, &y, Kernel::Rbf { gamma: 0.5 }, 2.0).unwrap();
        let (bound, balance) = dual_feasibility(&m);
        assert!(bound <= 1e-9, "bound violation {bound}");
        assert!(balance < 1e-9, "sum alpha*y = {balance}");
    }

    #[test]
    fn label_flip_negates_the_decision_function() {
        let x: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i % 4) as f64, (i / 4) as f64])
            .collect();
        let y: Vec<f64> = (0..12).map(|i| if i < 6 { 1.0 } else { -1.0 }).collect();
        let y_flip: Vec<f64> = y.iter().map(|v| -v).collect();
        let m1 = train_svm(&x, &y, Kernel::Rbf { gamma: 0.7 }, 1.0).unwrap();
        let m2 = train_svm(&x, &y_flip, Kernel::Rbf { gamma: 0.7 }, 1.0).unwrap();
        for probe in &x {
            let (_, f1) = predict_svm(&m1, probe).unwrap();
            let (_, f2) = predict_svm(&m2, probe).unwrap();
            assert!((f1 + f2).abs() < 2e-3, "f1 {f1} vs -f2 {}", -f2);
        }
    }

    #[test]
    fn single_class_or_bad_labels_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(train_svm(&x, &[1.0, 1.0], Kernel::Linear, 1.0).is_err());
        assert!(train_svm(&x, &[1.0, 0.5], Kernel::Linear, 1.0).is_err());
        assert!(train_svm(&x, &[1.0, -1.0], Kernel::Linear, 0.0).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.61).cos()])
            .collect();
        let y: Vec<f64> = (0..30).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let a = train_svm(&x, &y, Kernel::RbfAuto, 1.5).unwrap();
        let b = train_svm(&x, &y, Kernel::RbfAuto, 1.5).unwrap();
        assert_eq!(a, b);
    }
}
