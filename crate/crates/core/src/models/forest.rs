use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, Grower, TreeParams};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
    /// Features examined per split; `None` means ⌈√d⌉.
    pub max_features: Option<usize>,
    /// Weighted bootstrap resampling per tree. When off, each tree sees the
    /// full training set with its weights.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_depth: 8, min_samples_leaf: 1, seed: 42, max_features: None, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub tree_seeds: Vec<u64>,
}

impl RandomForest {
    /// Share of trees voting 1.
    pub fn vote_share(&self, row: &[f64]) -> f64 {
        let ones = self.trees.iter().filter(|t| t.predict_row(row) == 1).count();
        ones as f64 / self.trees.len() as f64
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.vote_share(row) >= 0.5)
    }
}

/// Grows one tree from its own seed so the result does not depend on the
/// order in which trees are trained.
pub fn grow_tree(x: &Matrix, y: &[u8], w: &[f64], params: &ForestParams, index: usize) -> Result<(DecisionTree, u64)> {
    let seed = params.seed.wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.rows();
    let d = x.cols();
    let m = params.max_features.unwrap_or_else(|| math::ceil(math::sqrt(d as f64)) as usize).clamp(1, d.max(1));
    let tree_params = TreeParams { max_depth: params.max_depth, min_samples_leaf: params.min_samples_leaf };
    let (bx, by, bw);
    let (xs, ys, ws): (&Matrix, &[u8], &[f64]) = if params.bootstrap {
        let dist = WeightedIndex::new(w).map_err(|e| Error::Domain(alloc::format!("bootstrap weights: {e}")))?;
        let idx: Vec<usize> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        bx = x.select_rows(&idx);
        by = idx.iter().map(|&i| y[i]).collect::<Vec<u8>>();
        // weights are consumed by the resampling
        bw = alloc::vec![1.0; n];
        (&bx, &by, &bw)
    } else {
        (x, y, w)
    };
    let tree = Grower::new(xs, ys, ws, tree_params, Some(m), Some(&mut rng)).grow((0..n).collect());
    Ok((tree, seed))
}

pub fn fit(x: &Matrix, y: &[u8], w: &[f64], params: &ForestParams) -> Result<RandomForest> {
    if y.len() != x.rows() || w.len() != x.rows() {
        return Err(Error::dim("forest inputs", x.rows(), y.len().min(w.len())));
    }
    if x.rows() == 0 {
        return Err(Error::Domain("cannot grow a forest on zero rows".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::Config("forest needs n_trees >= 1".into()));
    }
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut tree_seeds = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let (tree, seed) = grow_tree(x, y, w, params, t)?;
        trees.push(tree);
        tree_seeds.push(seed);
    }
    Ok(RandomForest { trees, tree_seeds })
}
