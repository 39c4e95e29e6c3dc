use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts and derived scores with class 1 ("High") as positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    /// Set when precision had no predicted positives (reported as 0).
    pub precision_degenerate: bool,
    /// Set when recall had no actual positives (reported as 0).
    pub recall_degenerate: bool,
}

impl ClassificationScores {
    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn classification_scores(y: &[u8], y_hat: &[u8]) -> Result<ClassificationScores> {
    if y.len() != y_hat.len() {
        return Err(Error::dim("classification_scores", y.len(), y_hat.len()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for (&a, &p) in y.iter().zip(y_hat) {
        match (a, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (0, 0) => tn += 1,
            (1, 0) => fn_ += 1,
            _ => return Err(Error::Domain(alloc::format!("non-binary pair ({a}, {p})"))),
        }
    }
    let ratio = |num: u64, den: u64| if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) };
    let n = tp + fp + tn + fn_;
    let (accuracy, _) = ratio(tp + tn, n);
    let (precision, precision_degenerate) = ratio(tp, tp + fp);
    let (recall, recall_degenerate) = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Ok(ClassificationScores {
        accuracy,
        precision,
        recall,
        f1,
        tp,
        fp,
        tn,
        fn_,
        precision_degenerate,
        recall_degenerate,
    })
}
