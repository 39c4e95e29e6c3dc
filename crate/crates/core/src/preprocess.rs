//! Target/protected binarization, standardization and seeded splits.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// How the continuous target and protected columns become 0/1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarizationSpec {
    /// Percentile (0, 100) of the target used as the Low/High cutoff.
    pub target_percentile: f64,
    /// Filled in once the target has been binarized.
    pub resolved_target_threshold: Option<f64>,
    /// Cutoff per protected column name.
    pub protected_thresholds: BTreeMap<String, f64>,
    /// `value >= cutoff` maps to 1 when set.
    pub ge_maps_to_one: bool,
}

impl Default for BinarizationSpec {
    fn default() -> Self {
        BinarizationSpec {
            target_percentile: 30.0,
            resolved_target_threshold: None,
            protected_thresholds: BTreeMap::new(),
            ge_maps_to_one: true,
        }
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Domain(format!("{what}[{i}] = {} is not finite", values[i]))),
        None => Ok(()),
    }
}

/// Percentile with linear interpolation between closest ranks
/// (rank = p/100 · (n − 1) on the sorted sample).
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("percentile of an empty sample".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Domain(format!("percentile {p} outside [0, 100]")));
    }
    check_finite(values, "values")?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = math::floor(rank) as usize;
    let hi = math::ceil(rank) as usize;
    let frac = rank - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub fn median(values: &[f64]) -> Result<f64> {
    percentile(values, 50.0)
}

/// Labels 0 ("Low") below the percentile cutoff and 1 ("High") at or above it.
pub fn binarize_target(values: &[f64], pct: f64) -> Result<(Vec<u8>, f64)> {
    if !(pct > 0.0 && pct < 100.0) {
        return Err(Error::Domain(format!("target percentile {pct} outside (0, 100)")));
    }
    let threshold = percentile(values, pct)?;
    let labels = values.iter().map(|&v| u8::from(v >= threshold)).collect();
    Ok((labels, threshold))
}

pub fn binarize_protected(values: &[f64], threshold: f64, ge_maps_to_one: bool) -> Result<Vec<u8>> {
    check_finite(values, "protected")?;
    if threshold.is_nan() {
        return Err(Error::Domain("protected threshold is NaN".into()));
    }
    Ok(values.iter().map(|&v| u8::from((v >= threshold) == ge_maps_to_one)).collect())
}

/// Per-feature centering and scaling, population convention (divide by n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

pub fn fit_standardizer(x: &Matrix) -> Result<StandardizationParams> {
    if x.rows() == 0 {
        return Err(Error::Domain("cannot fit a standardizer on zero rows".into()));
    }
    if !x.all_finite() {
        return Err(Error::Domain("non-finite feature value".into()));
    }
    let n = x.rows() as f64;
    let d = x.cols();
    let mut mean = alloc::vec![0.0; d];
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = alloc::vec![0.0; d];
    for row in x.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = math::sqrt(s / n);
            // zero-variance columns collapse to 0 after centering
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok(StandardizationParams { mean, scale })
}

impl StandardizationParams {
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::dim("standardizer columns", self.mean.len(), x.cols()));
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn apply_row(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s));
    }
}

pub fn apply_standardizer(params: &StandardizationParams, x: &Matrix) -> Result<Matrix> {
    params.apply(x)
}

/// Sorted row indices of each partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits `total` across classes by largest remainder so the parts sum to
/// `total` exactly. Remainder ties go to the lower class.
fn apportion(total: usize, class_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let quotas: Vec<f64> = class_sizes.iter().map(|&c| c as f64 * fraction).collect();
    let mut parts: Vec<usize> = quotas.iter().map(|q| math::floor(*q) as usize).collect();
    let assigned: usize = parts.iter().sum();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - parts[a] as f64;
        let rb = quotas[b] - parts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(assigned);
    for &c in order.iter().cycle().take(class_sizes.len() * 2) {
        if left == 0 {
            break;
        }
        if parts[c] < class_sizes[c] {
            parts[c] += 1;
            left -= 1;
        }
    }
    parts
}

/// Seeded train/test partition of `labels.len()` rows.
///
/// The test partition holds `round(n · test_fraction)` rows. When stratified,
/// that total is apportioned across the two classes by largest remainder.
pub fn split_indices(labels: &[u8], test_fraction: f64, seed: u64, stratified: bool) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Domain(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::Domain(format!("cannot split {n} rows")));
    }
    let total = math::round(n as f64 * test_fraction) as usize;
    if total == 0 || total == n {
        return Err(Error::Domain(format!("test fraction {test_fraction} leaves an empty partition for n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::with_capacity(total);
    let mut train = Vec::with_capacity(n - total);
    if stratified {
        let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (i, &c) in labels.iter().enumerate() {
            if c > 1 {
                return Err(Error::Domain(format!("label[{i}] = {c} is not 0/1")));
            }
            classes[c as usize].push(i);
        }
        for (c, members) in classes.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Stratification(c as u8));
            }
        }
        let parts = apportion(total, &[classes[0].len(), classes[1].len()], test_fraction);
        for (members, take) in classes.iter_mut().zip(parts) {
            members.shuffle(&mut rng);
            test.extend_from_slice(&members[..take]);
            train.extend_from_slice(&members[take..]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        test.extend_from_slice(&all[..total]);
        train.extend_from_slice(&all[total..]);
    }
    test.sort_unstable();
    train.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn split_train_test(
    ds: &TabularDataset,
    test_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(TabularDataset, TabularDataset)> {
    let idx = split_indices(ds.y(), test_fraction, seed, stratified)?;
    Ok((ds.subset(&idx.train), ds.subset(&idx.test)))
}

/// Convenience used by reports: fraction of label 0 among `labels`.
pub fn low_share(labels: &[u8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().filter(|&&l| l == 0).count() as f64 / labels.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Independent oracle: for each candidate rank position, the interpolated
    /// value must match numpy's "linear" definition written out longhand.
    fn percentile_oracle(v: &[f64], p: f64) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = (s.len() as f64 - 1.0) * p / 100.0;
        let below = pos as usize;
        if below + 1 >= s.len() {
            return s[s.len() - 1];
        }
        let w = pos - below as f64;
        s[below] * (1.0 - w) + s[below + 1] * w
    }

    #[test]
    fn decile_fixture_threshold_is_37() {
        let v: Vec<f64> = (1..=10).map(|i| 10.0 * i as f64).collect();
        assert!((percentile_oracle(&v, 30.0) - 37.0).abs() < 1e-12);
        let (labels, t) = binarize_target(&v, 30.0).unwrap();
        assert!((t - 37.0).abs() < 1e-12);
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn constant_target_is_all_high() {
        let (labels, t) = binarize_target(&[4.5; 6], 30.0).unwrap();
        assert_eq!(t, 4.5);
        assert!(labels.iter().all(|&l| l == 1));
    }

    #[test]
    fn empty_target_is_domain_error() {
        assert!(matches!(binarize_target(&[], 30.0), Err(Error::Domain(_))));
    }

    #[test]
    fn protected_cutoff_is_inclusive() {
        assert_eq!(binarize_protected(&[59.3], 59.3, true).unwrap(), vec![1]);
        assert_eq!(binarize_protected(&[59.2999], 59.3, true).unwrap(), vec![0]);
        assert_eq!(binarize_protected(&[59.3, 10.0], 59.3, false).unwrap(), vec![0, 1]);
        assert_eq!(binarize_protected(&[-5.0, 0.0, 3.0], f64::NEG_INFINITY, true).unwrap(), vec![1, 1, 1]);
        assert!(binarize_protected(&[f64::NAN], 1.0, true).is_err());
    }

    #[test]
    fn standardizer_population_convention() {
        let x = Matrix::from_columns(3, &[[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]]).unwrap();
        let p = fit_standardizer(&x).unwrap();
        assert!((p.mean[0] - 2.0).abs() < 1e-15);
        assert!((p.scale[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(p.scale[1], 1.0);
        let z = p.apply(&x).unwrap();
        assert_eq!(z.column(1), vec![0.0, 0.0, 0.0]);
        let m: f64 = z.column(0).iter().sum::<f64>() / 3.0;
        assert!(m.abs() < 1e-9);
        assert!(fit_standardizer(&Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn balanced_ten_rows_gives_three_test_rows() {
        let y = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let s = split_indices(&y, 0.3, 42, true).unwrap();
        assert_eq!(s.test.len(), 3);
        let ones = s.test.iter().filter(|&&i| y[i] == 1).count();
        assert!(ones == 1 || ones == 2);
        assert_eq!(s.train.len() + s.test.len(), 10);
    }

    #[test]
    fn county_sized_split_has_932_test_rows() {
        let y: Vec<u8> = (0..3107).map(|i| u8::from(i % 10 >= 3)).collect();
        let s = split_indices(&y, 0.3, 42, true).unwrap();
        assert_eq!(s.test.len(), 932);
        let u = split_indices(&y, 0.3, 42, false).unwrap();
        assert_eq!(u.test.len(), 932);
    }

    #[test]
    fn missing_class_fails_stratification() {
        assert_eq!(split_indices(&[1, 1, 1, 1], 0.5, 1, true), Err(Error::Stratification(0)));
        assert!(split_indices(&[1, 1, 1, 1], 0.5, 1, false).is_ok());
    }

    #[test]
    fn apportion_sums_to_total() {
        assert_eq!(apportion(3, &[5, 5], 0.3), vec![2, 1]);
        assert_eq!(apportion(932, &[932, 2175], 0.3).iter().sum::<usize>(), 932);
    }
}
