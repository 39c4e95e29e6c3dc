//! Weight-aware binary classifiers and classification scores.
//!
//! All five families train on `(X, y, weights)`. KNN ignores the weights;
//! the tree uses weighted Gini, the forest a weighted bootstrap, the linear
//! SVM a weighted hinge loss and logistic regression a weighted likelihood.

pub mod forest;
pub mod knn;
pub mod logistic;
pub mod scores;
pub mod svm;
pub mod tree;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::preprocess::{fit_standardizer, StandardizationParams};

pub use forest::{ForestParams, RandomForest};
pub use knn::KnnModel;
pub use logistic::{LogisticModel, LogisticParams};
pub use scores::{classification_scores, ClassificationScores};
pub use svm::{LinearSvmModel, SvmParams};
pub use tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    Knn,
    Tree,
    Forest,
    LinearSvm,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Logistic, Family::Knn, Family::Tree, Family::Forest, Family::LinearSvm];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::Knn => "knn",
            Family::Tree => "tree",
            Family::Forest => "forest",
            Family::LinearSvm => "linear_svm",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

/// Classifier family with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Logistic(LogisticParams),
    Knn { k: usize },
    Tree(TreeParams),
    Forest(ForestParams),
    LinearSvm(SvmParams),
}

impl ClassifierSpec {
    pub fn default_for(family: Family) -> ClassifierSpec {
        match family {
            Family::Logistic => ClassifierSpec::Logistic(LogisticParams::default()),
            Family::Knn => ClassifierSpec::Knn { k: 5 },
            Family::Tree => ClassifierSpec::Tree(TreeParams::default()),
            Family::Forest => ClassifierSpec::Forest(ForestParams::default()),
            Family::LinearSvm => ClassifierSpec::LinearSvm(SvmParams::default()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ClassifierSpec::Logistic(_) => Family::Logistic,
            ClassifierSpec::Knn { .. } => Family::Knn,
            ClassifierSpec::Tree(_) => Family::Tree,
            ClassifierSpec::Forest(_) => Family::Forest,
            ClassifierSpec::LinearSvm(_) => Family::LinearSvm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            ClassifierSpec::Logistic(p) => {
                if !(p.l2_lambda >= 0.0 && p.l2_lambda.is_finite()) {
                    return bad(format!("logistic l2_lambda = {} must be >= 0", p.l2_lambda));
                }
                if !(p.tol > 0.0) {
                    return bad(format!("logistic tol = {} must be > 0", p.tol));
                }
                if p.max_iter == 0 {
                    return bad("logistic max_iter must be >= 1".into());
                }
            }
            ClassifierSpec::Knn { k } if *k == 0 => return bad("knn k must be >= 1".into()),
            ClassifierSpec::Knn { .. } => {}
            ClassifierSpec::Tree(p) if p.max_depth == 0 || p.min_samples_leaf == 0 => {
                return bad("tree needs max_depth >= 1 and min_samples_leaf >= 1".into())
            }
            ClassifierSpec::Tree(_) => {}
            ClassifierSpec::Forest(p) => {
                if p.n_trees == 0 || p.max_depth == 0 || p.min_samples_leaf == 0 {
                    return bad("forest needs n_trees, max_depth, min_samples_leaf >= 1".into());
                }
                if p.max_features == Some(0) {
                    return bad("forest max_features must be >= 1".into());
                }
            }
            ClassifierSpec::LinearSvm(p) => {
                if !(p.c > 0.0) || p.epochs == 0 {
                    return bad("linear_svm needs c > 0 and epochs >= 1".into());
                }
            }
        }
        Ok(())
    }

    /// Replaces the seed of seeded families.
    pub fn with_seed(self, seed: u64) -> ClassifierSpec {
        match self {
            ClassifierSpec::Forest(p) => ClassifierSpec::Forest(ForestParams { seed, ..p }),
            ClassifierSpec::LinearSvm(p) => ClassifierSpec::LinearSvm(SvmParams { seed, ..p }),
            other => other,
        }
    }
}

/// Learned parameters, one variant per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    Logistic(LogisticModel),
    Knn(KnnModel),
    Tree(DecisionTree),
    Forest(RandomForest),
    LinearSvm(LinearSvmModel),
}

/// A fitted classifier. Immutable after fitting; prediction takes `&self`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    pub feature_names: Vec<String>,
    /// Applied to raw rows before the model sees them, when present.
    pub standardizer: Option<StandardizationParams>,
    pub params: ModelParams,
}

/// Fits `spec` on `x` as given (no standardization).
pub fn fit_params(spec: &ClassifierSpec, x: &Matrix, y: &[u8], w: &[f64]) -> Result<ModelParams> {
    spec.validate()?;
    if y.len() != x.rows() {
        return Err(Error::dim("fit labels", x.rows(), y.len()));
    }
    if w.len() != x.rows() {
        return Err(Error::dim("fit weights", x.rows(), w.len()));
    }
    if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain(format!("weight[{i}] = {} must be positive", w[i])));
    }
    if let Some(i) = y.iter().position(|&v| v > 1) {
        return Err(Error::Domain(format!("label[{i}] = {} is not 0/1", y[i])));
    }
    Ok(match spec {
        ClassifierSpec::Logistic(p) => ModelParams::Logistic(logistic::fit(x, y, w, p)?),
        ClassifierSpec::Knn { k } => ModelParams::Knn(knn::fit(x, y, *k)?),
        ClassifierSpec::Tree(p) => ModelParams::Tree(tree::fit(x, y, w, p)?),
        ClassifierSpec::Forest(p) => ModelParams::Forest(forest::fit(x, y, w, p)?),
        ClassifierSpec::LinearSvm(p) => ModelParams::LinearSvm(svm::fit(x, y, w, p)?),
    })
}

/// Fits a model, optionally standardizing features with statistics of `x`.
pub fn fit(
    spec: &ClassifierSpec,
    feature_names: &[String],
    x: &Matrix,
    y: &[u8],
    w: &[f64],
    standardize: bool,
) -> Result<TrainedModel> {
    if feature_names.len() != x.cols() {
        return Err(Error::dim("fit feature names", x.cols(), feature_names.len()));
    }
    let (standardizer, params) = if standardize {
        let s = fit_standardizer(x)?;
        let z = s.apply(x)?;
        (Some(s), fit_params(spec, &z, y, w)?)
    } else {
        (None, fit_params(spec, x, y, w)?)
    };
    Ok(TrainedModel { spec: *spec, feature_names: feature_names.to_vec(), standardizer, params })
}

impl ModelParams {
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        match self {
            ModelParams::Logistic(m) => u8::from(m.proba(row) >= 0.5),
            ModelParams::Knn(m) => m.predict_row(row),
            ModelParams::Tree(m) => m.predict_row(row),
            ModelParams::Forest(m) => m.predict_row(row),
            ModelParams::LinearSvm(m) => m.predict_row(row),
        }
    }
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn family(&self) -> Family {
        self.spec.family()
    }

    fn prepared(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features() {
            return Err(Error::dim("predict features", self.n_features(), x.cols()));
        }
        match &self.standardizer {
            Some(s) => s.apply(x),
            None => Ok(x.clone()),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        let z = self.prepared(x)?;
        Ok(z.iter_rows().map(|r| self.params.predict_row(r)).collect())
    }

    /// Class-1 probabilities; logistic regression only.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        let ModelParams::Logistic(m) = &self.params else {
            return Err(Error::Config(format!(
                "predict_proba is only defined for logistic regression, not {}",
                self.family().as_str()
            )));
        };
        let z = self.prepared(x)?;
        Ok(z.iter_rows().map(|r| m.proba(r)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_logistic_predicts_half_and_one() {
        let m = TrainedModel {
            spec: ClassifierSpec::default_for(Family::Logistic),
            feature_names: vec!["a".into()],
            standardizer: None,
            params: ModelParams::Logistic(LogisticModel {
                coef: vec![0.0],
                intercept: 0.0,
                converged: true,
                iterations: 0,
                final_loss: 0.0,
                grad_inf_norm: 0.0,
            }),
        };
        let x = Matrix::from_vec(1, 1, vec![3.0]).unwrap();
        assert_eq!(m.predict_proba(&x).unwrap(), vec![0.5]);
        assert_eq!(m.predict(&x).unwrap(), vec![1]);
        let wrong = Matrix::zeros(1, 2);
        assert!(matches!(m.predict(&wrong), Err(Error::Dimension { .. })));
    }

    #[test]
    fn spec_validation() {
        assert!(ClassifierSpec::Knn { k: 0 }.validate().is_err());
        assert!(ClassifierSpec::LinearSvm(SvmParams { c: 0.0, ..Default::default() }).validate().is_err());
        for f in Family::ALL {
            ClassifierSpec::default_for(f).validate().unwrap();
            assert_eq!(Family::parse(f.as_str()), Some(f));
        }
    }
}
