use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Feature matrix with binary labels, named binary protected columns and
/// per-instance weights.
///
/// Invariants (checked by [`TabularDataset::new`]): all columns share the row
/// count, features are finite, labels and protected values are 0/1, and every
/// weight is strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    feature_names: Vec<String>,
    x: Matrix,
    y: Vec<u8>,
    protected: BTreeMap<String, Vec<u8>>,
    weights: Vec<f64>,
    ids: Vec<String>,
}

fn check_binary(name: &str, v: &[u8]) -> Result<()> {
    match v.iter().position(|&b| b > 1) {
        Some(i) => Err(Error::InvalidDataset(format!("{name}[{i}] = {} is not 0/1", v[i]))),
        None => Ok(()),
    }
}

impl TabularDataset {
    pub fn new(
        feature_names: Vec<String>,
        x: Matrix,
        y: Vec<u8>,
        protected: BTreeMap<String, Vec<u8>>,
        weights: Option<Vec<f64>>,
        ids: Vec<String>,
    ) -> Result<Self> {
        let n = y.len();
        if x.rows() != n {
            return Err(Error::dim("TabularDataset features", n, x.rows()));
        }
        if feature_names.len() != x.cols() {
            return Err(Error::dim("TabularDataset feature names", x.cols(), feature_names.len()));
        }
        if ids.len() != n {
            return Err(Error::dim("TabularDataset ids", n, ids.len()));
        }
        if !x.all_finite() {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        check_binary("y", &y)?;
        for (name, col) in &protected {
            if col.len() != n {
                return Err(Error::dim("TabularDataset protected column", n, col.len()));
            }
            check_binary(name, col)?;
        }
        let weights = weights.unwrap_or_else(|| alloc::vec![1.0; n]);
        if weights.len() != n {
            return Err(Error::dim("TabularDataset weights", n, weights.len()));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidDataset(format!("weight[{i}] = {} is not a positive finite number", weights[i])));
        }
        Ok(TabularDataset { feature_names, x, y, protected, weights, ids })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn protected_columns(&self) -> &BTreeMap<String, Vec<u8>> {
        &self.protected
    }

    pub fn protected(&self, name: &str) -> Result<&[u8]> {
        self.protected
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Config(format!("unknown protected column `{name}`")))
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::dim("with_weights", self.len(), weights.len()));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidDataset(format!("weight[{i}] = {} is not a positive finite number", weights[i])));
        }
        self.weights = weights;
        Ok(self)
    }

    /// Replaces the feature block, keeping labels, groups, weights and ids.
    pub fn with_features(mut self, names: Vec<String>, x: Matrix) -> Result<Self> {
        if x.rows() != self.len() {
            return Err(Error::dim("with_features", self.len(), x.rows()));
        }
        if names.len() != x.cols() {
            return Err(Error::dim("with_features names", x.cols(), names.len()));
        }
        if !x.all_finite() {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        self.feature_names = names;
        self.x = x;
        Ok(self)
    }

    /// Appends a protected column as an extra 0/1 feature.
    pub fn with_protected_as_feature(self, name: &str) -> Result<Self> {
        let col: Vec<f64> = self.protected(name)?.iter().map(|&b| f64::from(b)).collect();
        let extra = Matrix::from_columns(self.len(), &[col])?;
        let x = self.x.hstack(&extra)?;
        let mut names = self.feature_names.clone();
        names.push(String::from(name));
        self.with_features(names, x)
    }

    /// Rows at `idx`, in that order, with every column carried along.
    pub fn subset(&self, idx: &[usize]) -> TabularDataset {
        let pick_u8 = |v: &[u8]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        TabularDataset {
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(idx),
            y: pick_u8(&self.y),
            protected: self.protected.iter().map(|(k, v)| (k.clone(), pick_u8(v))).collect(),
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tiny() -> TabularDataset {
        let mut p = BTreeMap::new();
        p.insert("g".into(), vec![0, 1, 1]);
        TabularDataset::new(
            vec!["a".into()],
            Matrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap(),
            vec![0, 1, 0],
            p,
            None,
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap()
    }

    #[test]
    fn default_weights_are_one() {
        assert_eq!(tiny().weights(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn rejects_non_binary_labels_and_bad_weights() {
        let d = tiny();
        assert!(d.clone().with_weights(vec![1.0, 0.0, 1.0]).is_err());
        let r = TabularDataset::new(vec![], Matrix::zeros(1, 0), vec![2], BTreeMap::new(), None, vec!["a".into()]);
        assert!(matches!(r, Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn subset_carries_everything() {
        let s = tiny().subset(&[2, 0]);
        assert_eq!(s.ids(), &[String::from("z"), String::from("x")]);
        assert_eq!(s.protected("g").unwrap(), &[1, 0]);
        assert_eq!(s.x().column(0), vec![3.0, 1.0]);
    }

    #[test]
    fn protected_feature_is_appended() {
        let d = tiny().with_protected_as_feature("g").unwrap();
        assert_eq!(d.feature_names().len(), 2);
        assert_eq!(d.x().column(1), vec![0.0, 1.0, 1.0]);
    }
}
