//! L2-regularized, instance-weighted logistic regression fitted by full-batch
//! gradient descent with a backtracking (Armijo) line search.
//!
//! Objective, with `z = β·x + β₀` and the intercept unpenalized:
//!
//! ```text
//! L(β) = Σ wᵢ [ yᵢ·softplus(−zᵢ) + (1 − yᵢ)·softplus(zᵢ) ] + (λ/2)·‖β‖²
//! ```

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub l2_lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams { l2_lambda: 1e-4, tol: 1e-6, max_iter: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_loss: f64,
    pub grad_inf_norm: f64,
}

impl LogisticModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        math::sigmoid(self.decision(row))
    }
}

/// Parameter vector layout: `[β₀, β₁, …, β_d]`.
pub fn loss(x: &Matrix, y: &[u8], w: &[f64], lambda: f64, theta: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, row) in x.iter_rows().enumerate() {
        let z = theta[0] + theta[1..].iter().zip(row).map(|(b, v)| b * v).sum::<f64>();
        let l = if y[i] == 1 { math::softplus(-z) } else { math::softplus(z) };
        total += w[i] * l;
    }
    total + 0.5 * lambda * theta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Loss and its gradient at `theta` (same layout as [`loss`]).
pub fn loss_and_gradient(x: &Matrix, y: &[u8], w: &[f64], lambda: f64, theta: &[f64]) -> (f64, Vec<f64>) {
    let d = x.cols();
    let mut grad = alloc::vec![0.0; d + 1];
    let mut total = 0.0;
    for (i, row) in x.iter_rows().enumerate() {
        let z = theta[0] + theta[1..].iter().zip(row).map(|(b, v)| b * v).sum::<f64>();
        let yi = f64::from(y[i]);
        total += w[i] * if y[i] == 1 { math::softplus(-z) } else { math::softplus(z) };
        let r = w[i] * (math::sigmoid(z) - yi);
        grad[0] += r;
        for (g, v) in grad[1..].iter_mut().zip(row) {
            *g += r * v;
        }
    }
    for (g, b) in grad[1..].iter_mut().zip(&theta[1..]) {
        *g += lambda * b;
    }
    total += 0.5 * lambda * theta[1..].iter().map(|b| b * b).sum::<f64>();
    (total, grad)
}

/// `loss(theta_new) − loss(theta)`, summed row by row so that changes below
/// the rounding unit of the loss itself stay resolvable.
pub fn loss_change(x: &Matrix, y: &[u8], w: &[f64], lambda: f64, theta: &[f64], theta_new: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, row) in x.iter_rows().enumerate() {
        let z = theta[0] + theta[1..].iter().zip(row).map(|(b, v)| b * v).sum::<f64>();
        let zn = theta_new[0] + theta_new[1..].iter().zip(row).map(|(b, v)| b * v).sum::<f64>();
        let d = if y[i] == 1 { math::softplus_diff(-zn, -z) } else { math::softplus_diff(zn, z) };
        total += w[i] * d;
    }
    let reg: f64 = theta[1..].iter().zip(&theta_new[1..]).map(|(a, b)| (b - a) * (b + a)).sum();
    total + 0.5 * lambda * reg
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, g| m.max(g.abs()))
}

pub fn fit(x: &Matrix, y: &[u8], w: &[f64], params: &LogisticParams) -> Result<LogisticModel> {
    fit_traced(x, y, w, params).map(|(m, _)| m)
}

/// As [`fit`], also returning the loss after every accepted step (the
/// starting loss first).
pub fn fit_traced(x: &Matrix, y: &[u8], w: &[f64], params: &LogisticParams) -> Result<(LogisticModel, Vec<f64>)> {
    let n = x.rows();
    if y.len() != n {
        return Err(Error::dim("logistic labels", n, y.len()));
    }
    if w.len() != n {
        return Err(Error::dim("logistic weights", n, w.len()));
    }
    if n == 0 {
        return Err(Error::Domain("cannot fit logistic regression on zero rows".into()));
    }
    let d = x.cols();
    let lambda = params.l2_lambda;
    let mut theta = alloc::vec![0.0; d + 1];
    let (mut f, mut g) = loss_and_gradient(x, y, w, lambda, &theta);
    let mut trace = alloc::vec![f];
    let mut step = 1.0 / (w.iter().sum::<f64>().max(1e-12));
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iter {
        let gnorm = inf_norm(&g);
        if gnorm < params.tol {
            converged = true;
            break;
        }
        // Barzilai-Borwein trial step, safeguarded by the Armijo test below.
        if let Some((theta_prev, g_prev)) = &prev {
            let mut sy = 0.0;
            let mut ss = 0.0;
            for k in 0..=d {
                let s = theta[k] - theta_prev[k];
                let yk = g[k] - g_prev[k];
                sy += s * yk;
                ss += s * s;
            }
            if sy > 0.0 && ss > 0.0 {
                step = ss / sy;
            } else {
                step *= 2.0;
            }
        }
        let g2: f64 = g.iter().map(|v| v * v).sum();
        let mut accepted = None;
        let mut t = step;
        for _ in 0..80 {
            let cand: Vec<f64> = theta.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let change = loss_change(x, y, w, lambda, &theta, &cand);
            if change.is_finite() && change <= -1e-4 * t * g2 {
                accepted = Some(cand);
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some(cand) = accepted else {
            // No decrease is representable at this precision: treat as stalled.
            break;
        };
        let (fn_, gn) = loss_and_gradient(x, y, w, lambda, &cand);
        if !fn_.is_finite() || gn.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure {
                iteration: iterations,
                detail: format!("non-finite loss {fn_} at iterate {cand:?}"),
            });
        }
        prev = Some((core::mem::replace(&mut theta, cand), core::mem::replace(&mut g, gn)));
        f = fn_;
        trace.push(f);
        step = t;
    }
    if !converged && inf_norm(&g) < params.tol {
        converged = true;
    }
    if !f.is_finite() {
        return Err(Error::NumericFailure { iteration: iterations, detail: format!("non-finite loss {f}") });
    }
    let model = LogisticModel {
        intercept: theta[0],
        coef: theta[1..].to_vec(),
        converged,
        iterations,
        final_loss: f,
        grad_inf_norm: inf_norm(&g),
    };
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_points() -> (Matrix, Vec<u8>) {
        (Matrix::from_vec(2, 1, vec![-1.0, 1.0]).unwrap(), vec![0, 1])
    }

    /// Brute-force grid search over (β₀, β₁) for the two-point fixture.
    #[test]
    fn two_point_fixture_matches_grid_search() {
        let (x, y) = two_points();
        let w = [1.0, 1.0];
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in -40..=40 {
            for j in -40..=40 {
                let th = [i as f64 * 0.1, j as f64 * 0.25];
                let f = loss(&x, &y, &w, 0.1, &th);
                if f < best.0 {
                    best = (f, th[0], th[1]);
                }
            }
        }
        assert!(best.2 > 0.0);
        let m = fit(&x, &y, &w, &LogisticParams { l2_lambda: 0.1, ..Default::default() }).unwrap();
        assert!(m.converged);
        assert!(m.coef[0] > 0.0);
        assert!(m.final_loss <= best.0 + 1e-9);
        assert!((m.coef[0] - best.2).abs() < 0.25);
        assert!(m.proba(&[-1.0]) < 0.5 && m.proba(&[1.0]) > 0.5);
    }

    #[test]
    fn all_negative_labels_drive_intercept_down() {
        let x = Matrix::from_vec(4, 1, vec![-1.0, 0.0, 1.0, 2.0]).unwrap();
        let y = vec![0; 4];
        let m = fit(&x, &y, &[1.0; 4], &LogisticParams { l2_lambda: 1.0, ..Default::default() }).unwrap();
        assert!(m.intercept < -5.0, "{}", m.intercept);
        assert!(m.coef[0].abs() < 1e-3);
        assert!((0..4).all(|i| m.proba(x.row(i)) < 0.5));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let x = Matrix::from_vec(5, 2, vec![0.3, -1.2, 1.5, 0.4, -0.7, 2.0, 0.0, 0.1, 1.1, -0.5]).unwrap();
        let y = vec![1, 0, 1, 0, 1];
        let w = [1.0, 0.5, 2.0, 1.5, 0.7];
        let th = [0.2, -0.4, 0.9];
        let (_, g) = loss_and_gradient(&x, &y, &w, 0.3, &th);
        let h = 1e-5;
        for k in 0..3 {
            let mut p = th;
            let mut m = th;
            p[k] += h;
            m[k] -= h;
            let fd = (loss(&x, &y, &w, 0.3, &p) - loss(&x, &y, &w, 0.3, &m)) / (2.0 * h);
            assert!((fd - g[k]).abs() / g[k].abs().max(1e-8) < 1e-6);
        }
    }
}
