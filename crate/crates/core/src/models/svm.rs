//! Linear SVM trained by stochastic subgradient descent (Pegasos schedule) on
//!
//! ```text
//! (1/n)·Σ wᵢ·max(0, 1 − ỹᵢ·zᵢ) + ‖β‖² / (2·c·n),   ỹ ∈ {−1, +1}
//! ```
//!
//! The intercept rides along as a constant feature, so it shares the
//! regularizer.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, epochs: 200, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl LinearSvmModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }

    /// Margin zero predicts 1.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.margin(row) >= 0.0)
    }
}

/// Value of the primal objective; used by tests and diagnostics.
pub fn objective(x: &Matrix, y: &[u8], w: &[f64], c: f64, model: &LinearSvmModel) -> f64 {
    let n = x.rows() as f64;
    let hinge: f64 = x
        .iter_rows()
        .enumerate()
        .map(|(i, r)| {
            let s = if y[i] == 1 { 1.0 } else { -1.0 };
            w[i] * (1.0 - s * model.margin(r)).max(0.0)
        })
        .sum();
    let norm2 = model.coef.iter().map(|b| b * b).sum::<f64>() + model.intercept * model.intercept;
    hinge / n + norm2 / (2.0 * c * n)
}

pub fn fit(x: &Matrix, y: &[u8], w: &[f64], params: &SvmParams) -> Result<LinearSvmModel> {
    let n = x.rows();
    if y.len() != n || w.len() != n {
        return Err(Error::dim("svm inputs", n, y.len().min(w.len())));
    }
    if n == 0 {
        return Err(Error::Domain("cannot fit an SVM on zero rows".into()));
    }
    if !(params.c > 0.0) || params.epochs == 0 {
        return Err(Error::Config("svm needs c > 0 and epochs >= 1".into()));
    }
    let d = x.cols();
    let lambda = 1.0 / (params.c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    // beta[d] is the intercept
    let mut beta = alloc::vec![0.0; d + 1];
    let mut t = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let row = x.row(i);
            let s = if y[i] == 1 { 1.0 } else { -1.0 };
            let z = beta[d] + beta[..d].iter().zip(row).map(|(b, v)| b * v).sum::<f64>();
            let shrink = 1.0 - eta * lambda;
            beta.iter_mut().for_each(|b| *b *= shrink);
            if s * z < 1.0 {
                let g = eta * w[i] * s;
                for (b, v) in beta[..d].iter_mut().zip(row) {
                    *b += g * v;
                }
                beta[d] += g;
            }
        }
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::NumericFailure { iteration: t as usize, detail: "non-finite SVM weights".into() });
    }
    Ok(LinearSvmModel { intercept: beta[d], coef: beta[..d].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn two_point_fixture_is_separated() {
        let x = Matrix::from_vec(2, 1, vec![-1.0, 1.0]).unwrap();
        let y = [0, 1];
        let m = fit(&x, &y, &[1.0, 1.0], &SvmParams::default()).unwrap();
        assert_eq!(m.predict_row(&[-1.0]), 0);
        assert_eq!(m.predict_row(&[1.0]), 1);
        assert!(m.coef[0] > 0.0);
    }

    #[test]
    fn objective_decreases_with_training() {
        let x = Matrix::from_vec(6, 1, vec![-2.0, -1.0, -0.2, 0.3, 1.0, 2.5]).unwrap();
        let y = [0, 0, 1, 0, 1, 1];
        let w = [1.0; 6];
        let zero = LinearSvmModel { coef: vec![0.0], intercept: 0.0 };
        let m = fit(&x, &y, &w, &SvmParams { c: 1.0, epochs: 300, seed: 1 }).unwrap();
        assert!(objective(&x, &y, &w, 1.0, &m) < objective(&x, &y, &w, 1.0, &zero));
    }
}
