use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Stored training set for k-nearest-neighbour voting. Instance weights are
/// not used: every neighbour casts one vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<u8>,
}

pub fn fit(x: &Matrix, y: &[u8], k: usize) -> Result<KnnModel> {
    if y.len() != x.rows() {
        return Err(Error::dim("knn labels", x.rows(), y.len()));
    }
    if k == 0 || k > x.rows() {
        return Err(Error::Config(alloc::format!("knn k = {k} must lie in [1, n = {}]", x.rows())));
    }
    Ok(KnnModel { k, x: x.clone(), y: y.to_vec() })
}

impl KnnModel {
    /// Majority label of the `k` nearest stored rows (Euclidean). Distance
    /// ties keep the lower training index; vote ties go to label 0.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let mut dist: Vec<(f64, usize)> = self
            .x
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        let ones = dist[..self.k].iter().filter(|(_, i)| self.y[*i] == 1).count();
        u8::from(ones * 2 > self.k)
    }
}
