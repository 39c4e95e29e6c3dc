//! CART-style binary classification tree grown greedily on weighted Gini
//! impurity.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 8, min_samples_leaf: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Total instance weight of class 0 and class 1 that reached the leaf.
    Leaf { mass: [f64; 2] },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub depth: usize,
    pub n_features: usize,
}

impl DecisionTree {
    fn leaf(&self, row: &[f64]) -> [f64; 2] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { mass } => return *mass,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right }
                }
            }
        }
    }

    /// Class-1 share of the leaf mass.
    pub fn proba(&self, row: &[f64]) -> f64 {
        let m = self.leaf(row);
        let total = m[0] + m[1];
        if total > 0.0 {
            m[1] / total
        } else {
            0.5
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.proba(row) >= 0.5)
    }
}

/// Unnormalized weighted Gini: W·(1 − Σ pₖ²) = W − Σ mₖ²/W.
fn weighted_gini(m: [f64; 2]) -> f64 {
    let w = m[0] + m[1];
    if w <= 0.0 {
        0.0
    } else {
        w - (m[0] * m[0] + m[1] * m[1]) / w
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

pub(crate) struct Grower<'a, R> {
    x: &'a Matrix,
    y: &'a [u8],
    w: &'a [f64],
    params: TreeParams,
    /// Features examined per split; `None` examines all of them.
    max_features: Option<usize>,
    rng: Option<&'a mut R>,
    nodes: Vec<Node>,
    depth: usize,
}

impl<'a, R: Rng> Grower<'a, R> {
    pub(crate) fn new(
        x: &'a Matrix,
        y: &'a [u8],
        w: &'a [f64],
        params: TreeParams,
        max_features: Option<usize>,
        rng: Option<&'a mut R>,
    ) -> Self {
        Grower { x, y, w, params, max_features, rng, nodes: Vec::new(), depth: 0 }
    }

    pub(crate) fn grow(mut self, idx: Vec<usize>) -> DecisionTree {
        self.node(idx, 0);
        DecisionTree { nodes: self.nodes, depth: self.depth, n_features: self.x.cols() }
    }

    fn mass(&self, idx: &[usize]) -> [f64; 2] {
        let mut m = [0.0; 2];
        for &i in idx {
            m[self.y[i] as usize] += self.w[i];
        }
        m
    }

    fn features(&mut self) -> Vec<usize> {
        let d = self.x.cols();
        match (self.max_features, self.rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < d => {
                let mut f = rand::seq::index::sample(rng, d, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], total: [f64; 2]) -> Option<Candidate> {
        let msl = self.params.min_samples_leaf.max(1);
        let mut best: Option<Candidate> = None;
        let mut order = idx.to_vec();
        for f in self.features() {
            let x = self.x;
            order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
            let mut left = [0.0; 2];
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                left[self.y[i] as usize] += self.w[i];
                let (a, b) = (x.get(i, f), x.get(order[pos + 1], f));
                let n_left = pos + 1;
                if a == b || n_left < msl || order.len() - n_left < msl {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let impurity = weighted_gini(left) + weighted_gini(right);
                if best.as_ref().is_none_or(|c| impurity < c.impurity) {
                    let mid = 0.5 * (a + b);
                    best = Some(Candidate { feature: f, threshold: if mid < b { mid } else { a }, impurity });
                }
            }
        }
        best
    }

    fn node(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let mass = self.mass(&idx);
        self.nodes.push(Node::Leaf { mass });
        self.depth = self.depth.max(depth);
        let pure = mass[0] <= 0.0 || mass[1] <= 0.0;
        if pure || depth >= self.params.max_depth || idx.len() < 2 * self.params.min_samples_leaf.max(1) {
            return at;
        }
        let parent = weighted_gini(mass);
        let Some(c) = self.best_split(&idx, mass) else {
            return at;
        };
        if !(c.impurity < parent - 1e-12 * (mass[0] + mass[1])) {
            return at;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x.get(i, c.feature) <= c.threshold);
        let left = self.node(l, depth + 1);
        let right = self.node(r, depth + 1);
        self.nodes[at] = Node::Split { feature: c.feature, threshold: c.threshold, left, right };
        at
    }
}

pub fn fit(x: &Matrix, y: &[u8], w: &[f64], params: &TreeParams) -> Result<DecisionTree> {
    if y.len() != x.rows() || w.len() != x.rows() {
        return Err(Error::dim("tree inputs", x.rows(), y.len().min(w.len())));
    }
    if x.rows() == 0 {
        return Err(Error::Domain("cannot grow a tree on zero rows".into()));
    }
    let grower: Grower<'_, rand_chacha::ChaCha8Rng> = Grower::new(x, y, w, *params, None, None);
    Ok(grower.grow((0..x.rows()).collect()))
}
