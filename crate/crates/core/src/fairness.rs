//! Group fairness metrics with fair-range verdicts, and the reweighing
//! transform that makes labels independent of a protected attribute under
//! instance weights.
//!
//! Conventions: the favorable label defaults to 0 ("Low Risk"), the
//! privileged group to protected value 1, and statistical parity difference
//! is `rate(unprivileged) − rate(privileged)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// Tolerance for point-valued fair ranges.
pub const POINT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDefinition {
    pub protected_name: String,
    pub privileged_value: u8,
    pub favorable_label: u8,
}

impl GroupDefinition {
    pub fn new(protected_name: impl Into<String>) -> Self {
        GroupDefinition { protected_name: protected_name.into(), privileged_value: 1, favorable_label: 0 }
    }

    pub fn with_privileged(mut self, v: u8) -> Self {
        self.privileged_value = v;
        self
    }

    pub fn with_favorable(mut self, v: u8) -> Self {
        self.favorable_label = v;
        self
    }

    /// Same attribute with the privileged side flipped.
    pub fn swapped(&self) -> Self {
        GroupDefinition { privileged_value: 1 - self.privileged_value, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    BalancedAccuracy,
    StatisticalParityDifference,
    DisparateImpact,
    TheilIndex,
}

impl MetricName {
    pub const ALL: [MetricName; 4] = [
        MetricName::BalancedAccuracy,
        MetricName::StatisticalParityDifference,
        MetricName::DisparateImpact,
        MetricName::TheilIndex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::BalancedAccuracy => "balanced_accuracy",
            MetricName::StatisticalParityDifference => "statistical_parity_difference",
            MetricName::DisparateImpact => "disparate_impact",
            MetricName::TheilIndex => "theil_index",
        }
    }

    pub fn fair_range(self) -> FairRange {
        match self {
            MetricName::BalancedAccuracy => FairRange::Point { value: 1.0 },
            MetricName::StatisticalParityDifference => FairRange::Interval { lo: -0.1, hi: 0.1 },
            MetricName::DisparateImpact => FairRange::Interval { lo: 0.8, hi: 1.25 },
            MetricName::TheilIndex => FairRange::Point { value: 0.0 },
        }
    }
}

/// Closed interval or single fair point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FairRange {
    Interval { lo: f64, hi: f64 },
    Point { value: f64 },
}

impl FairRange {
    pub fn contains(&self, v: f64) -> bool {
        match *self {
            FairRange::Interval { lo, hi } => v >= lo && v <= hi,
            FairRange::Point { value: p } => (v - p).abs() <= POINT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub name: MetricName,
    #[serde(with = "crate::serde_float")]
    pub value: f64,
    pub fair_range: FairRange,
    pub within_fair_range: bool,
    pub weighted: bool,
}

impl MetricResult {
    pub fn new(name: MetricName, value: f64, weighted: bool) -> Self {
        let fair_range = name.fair_range();
        MetricResult {
            name,
            value,
            fair_range,
            within_fair_range: !value.is_nan() && fair_range.contains(value),
            weighted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub privileged: f64,
    pub unprivileged: f64,
}

fn check_inputs(outcomes: &[u8], protected: &[u8], weights: Option<&[f64]>) -> Result<()> {
    if outcomes.len() != protected.len() {
        return Err(Error::dim("group rates protected", outcomes.len(), protected.len()));
    }
    if let Some(w) = weights {
        if w.len() != outcomes.len() {
            return Err(Error::dim("group rates weights", outcomes.len(), w.len()));
        }
        if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain(format!("weight[{i}] = {} is invalid", w[i])));
        }
    }
    if outcomes.iter().chain(protected).any(|&b| b > 1) {
        return Err(Error::Domain("outcomes and protected values must be 0/1".into()));
    }
    Ok(())
}

/// Weighted share of favorable outcomes in each group.
pub fn group_favorable_rates(
    outcomes: &[u8],
    protected: &[u8],
    gd: &GroupDefinition,
    weights: Option<&[f64]>,
) -> Result<GroupRates> {
    check_inputs(outcomes, protected, weights)?;
    // [unprivileged, privileged] × [total, favorable]
    let mut acc = [[0.0f64; 2]; 2];
    let mut counts = [0usize; 2];
    for (i, (&o, &g)) in outcomes.iter().zip(protected).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let k = usize::from(g == gd.privileged_value);
        counts[k] += 1;
        acc[k][0] += w;
        if o == gd.favorable_label {
            acc[k][1] += w;
        }
    }
    let rate = |k: usize, label: &str| {
        if counts[k] == 0 || acc[k][0] <= 0.0 {
            Err(Error::EmptyGroup(format!("{label} group of `{}` is empty", gd.protected_name)))
        } else {
            Ok(acc[k][1] / acc[k][0])
        }
    };
    Ok(GroupRates { unprivileged: rate(0, "unprivileged")?, privileged: rate(1, "privileged")? })
}

/// `rate(unprivileged) − rate(privileged)`; fair range [−0.1, 0.1].
pub fn statistical_parity_difference(
    outcomes: &[u8],
    protected: &[u8],
    gd: &GroupDefinition,
    weights: Option<&[f64]>,
) -> Result<MetricResult> {
    let r = group_favorable_rates(outcomes, protected, gd, weights)?;
    Ok(MetricResult::new(MetricName::StatisticalParityDifference, r.unprivileged - r.privileged, weights.is_some()))
}

/// `rate(unprivileged) / rate(privileged)`; fair range [0.8, 1.25].
/// A zero privileged rate gives `+∞` (out of range) unless both rates are
/// zero, which is undefined.
pub fn disparate_impact(
    outcomes: &[u8],
    protected: &[u8],
    gd: &GroupDefinition,
    weights: Option<&[f64]>,
) -> Result<MetricResult> {
    let r = group_favorable_rates(outcomes, protected, gd, weights)?;
    let value = if r.privileged > 0.0 {
        r.unprivileged / r.privileged
    } else if r.unprivileged > 0.0 {
        f64::INFINITY
    } else {
        return Err(Error::UndefinedMetric {
            metric: "disparate_impact",
            reason: "no favorable outcomes in either group (0/0)".into(),
        });
    };
    Ok(MetricResult::new(MetricName::DisparateImpact, value, weights.is_some()))
}

/// Mean of true-positive and true-negative rates.
pub fn balanced_accuracy(y: &[u8], y_hat: &[u8]) -> Result<MetricResult> {
    if y.len() != y_hat.len() {
        return Err(Error::dim("balanced_accuracy", y.len(), y_hat.len()));
    }
    let mut c = [[0u64; 2]; 2];
    for (&a, &p) in y.iter().zip(y_hat) {
        if a > 1 || p > 1 {
            return Err(Error::Domain("labels must be 0/1".into()));
        }
        c[a as usize][p as usize] += 1;
    }
    let pos = c[1][0] + c[1][1];
    let neg = c[0][0] + c[0][1];
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric {
            metric: "balanced_accuracy",
            reason: "true labels contain a single class".into(),
        });
    }
    let tpr = c[1][1] as f64 / pos as f64;
    let tnr = c[0][0] as f64 / neg as f64;
    Ok(MetricResult::new(MetricName::BalancedAccuracy, 0.5 * (tpr + tnr), false))
}

/// Generalized entropy index with α = 1 over benefits `b = ŷ − y + 1`.
pub fn theil_index(y: &[u8], y_hat: &[u8]) -> Result<MetricResult> {
    if y.len() != y_hat.len() {
        return Err(Error::dim("theil_index", y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(Error::UndefinedMetric { metric: "theil_index", reason: "no instances".into() });
    }
    let benefits: Vec<f64> = y.iter().zip(y_hat).map(|(&a, &p)| f64::from(p) - f64::from(a) + 1.0).collect();
    let mu = benefits.iter().sum::<f64>() / benefits.len() as f64;
    if mu <= 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "theil_index",
            reason: "mean benefit is zero (every instance is a false negative)".into(),
        });
    }
    let total: f64 = benefits
        .iter()
        .map(|&b| {
            let r = b / mu;
            if r > 0.0 {
                r * math::ln(r)
            } else {
                0.0
            }
        })
        .sum();
    Ok(MetricResult::new(MetricName::TheilIndex, total / benefits.len() as f64, false))
}

/// Reweighing output. `cell_weights[g][c]` is `None` for empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweighResult {
    pub cell_weights: [[Option<f64>; 2]; 2],
    pub instance_weights: Vec<f64>,
    /// Set when only one group or one class is present; all weights are 1.
    pub degenerate: bool,
}

impl ReweighResult {
    pub fn cell(&self, group: u8, class: u8) -> Option<f64> {
        self.cell_weights[group as usize][class as usize]
    }
}

/// `W(g, c) = count(g)·count(c) / (n·count(g, c))`, assigned to every
/// instance of the cell. The weights sum to `n` whenever all four cells are
/// populated.
pub fn reweigh(y: &[u8], protected: &[u8]) -> Result<ReweighResult> {
    if y.len() != protected.len() {
        return Err(Error::dim("reweigh", y.len(), protected.len()));
    }
    if y.iter().chain(protected).any(|&b| b > 1) {
        return Err(Error::Domain("labels and protected values must be 0/1".into()));
    }
    let n = y.len();
    let mut joint = [[0usize; 2]; 2];
    for (&c, &g) in y.iter().zip(protected) {
        joint[g as usize][c as usize] += 1;
    }
    let group = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let class = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    if group.contains(&0) || class.contains(&0) {
        return Ok(ReweighResult {
            cell_weights: [[None; 2]; 2],
            instance_weights: alloc::vec![1.0; n],
            degenerate: true,
        });
    }
    let mut cell_weights = [[None; 2]; 2];
    for g in 0..2 {
        for c in 0..2 {
            if joint[g][c] > 0 {
                cell_weights[g][c] = Some((group[g] * class[c]) as f64 / (n * joint[g][c]) as f64);
            }
        }
    }
    let instance_weights =
        y.iter().zip(protected).map(|(&c, &g)| cell_weights[g as usize][c as usize].unwrap_or(1.0)).collect();
    Ok(ReweighResult { cell_weights, instance_weights, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn gd() -> GroupDefinition {
        GroupDefinition::new("g")
    }

    #[test]
    fn privileged_rate_by_count_and_weight() {
        let out = [0, 1, 0, 0];
        let g = [1, 1, 0, 0];
        let r = group_favorable_rates(&out, &g, &gd(), None).unwrap();
        assert_eq!(r.privileged, 0.5);
        let r = group_favorable_rates(&out, &g, &gd(), Some(&[3.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(r.privileged, 0.75);
        let r = group_favorable_rates(&[0, 0, 0, 0], &g, &gd(), None).unwrap();
        assert_eq!((r.privileged, r.unprivileged), (1.0, 1.0));
    }

    #[test]
    fn empty_group_is_named() {
        let e = group_favorable_rates(&[0, 1], &[1, 1], &gd(), None).unwrap_err();
        match e {
            Error::EmptyGroup(msg) => assert!(msg.contains("unprivileged") && msg.contains("`g`")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spd_ten_row_toy() {
        // unprivileged: 3 of 5 favorable (0.6); privileged: 2 of 5 (0.4)
        let g = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let out = [0, 0, 0, 1, 1, 0, 0, 1, 1, 1];
        let m = statistical_parity_difference(&out, &g, &gd(), None).unwrap();
        assert!((m.value - 0.2).abs() < 1e-12);
        assert!(!m.within_fair_range);
        let eq = statistical_parity_difference(&[0, 1, 0, 1], &[0, 0, 1, 1], &gd(), None).unwrap();
        assert_eq!(eq.value, 0.0);
        assert!(eq.within_fair_range);
    }

    #[test]
    fn di_twenty_row_toy_is_boundary_inclusive() {
        // unprivileged: 4 of 10 favorable; privileged: 5 of 10
        let mut g = vec![0u8; 10];
        g.extend(vec![1u8; 10]);
        let mut out = vec![0u8; 4];
        out.extend(vec![1u8; 6]);
        out.extend(vec![0u8; 5]);
        out.extend(vec![1u8; 5]);
        let m = disparate_impact(&out, &g, &gd(), None).unwrap();
        assert!((m.value - 0.8).abs() < 1e-12);
        assert!(MetricResult::new(MetricName::DisparateImpact, 0.8, false).within_fair_range);
    }

    #[test]
    fn di_infinite_and_undefined() {
        let g = [0, 0, 1, 1];
        let m = disparate_impact(&[0, 1, 1, 1], &g, &gd(), None).unwrap();
        assert_eq!(m.value, f64::INFINITY);
        assert!(!m.within_fair_range);
        assert!(matches!(disparate_impact(&[1, 1, 1, 1], &g, &gd(), None), Err(Error::UndefinedMetric { .. })));
    }

    #[test]
    fn balanced_accuracy_cases() {
        let y = [1, 1, 1, 1, 0, 0, 0, 0];
        assert_eq!(balanced_accuracy(&y, &y).unwrap().value, 1.0);
        assert_eq!(balanced_accuracy(&y, &[1; 8]).unwrap().value, 0.5);
        let p = [1, 1, 1, 0, 0, 0, 1, 1];
        assert_eq!(balanced_accuracy(&y, &p).unwrap().value, 0.625);
        assert!(balanced_accuracy(&[1, 1], &[1, 0]).is_err());
    }

    #[test]
    fn theil_cases() {
        assert_eq!(theil_index(&[0, 1, 1], &[0, 1, 1]).unwrap().value, 0.0);
        let v = theil_index(&[1, 0], &[0, 1]).unwrap().value;
        assert!((v - core::f64::consts::LN_2).abs() < 1e-12);
        // b = {1, 2}: (1/2)[(2/3)ln(2/3) + (4/3)ln(4/3)] = 0.056633...
        let v = theil_index(&[0, 0], &[0, 1]).unwrap().value;
        assert!((v - 0.056_633_012_265_132_4).abs() < 1e-12, "{v}");
        assert!(theil_index(&[1, 1], &[0, 0]).is_err());
    }

    #[test]
    fn reweigh_formula_point() {
        // n=10, count(g=1)=5, count(y=1)=4, count(g=1,y=1)=4
        let g = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let y = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0];
        let r = reweigh(&y, &g).unwrap();
        assert_eq!(r.cell(1, 1), Some(0.5));
        assert_eq!(r.cell(0, 1), None);
        // with an empty cell the total is 4·0.5 + 1·3 + 5·0.6, not n
        assert!((r.instance_weights.iter().sum::<f64>() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn reweigh_independent_and_degenerate() {
        let r = reweigh(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap();
        assert!(r.instance_weights.iter().all(|&w| w == 1.0));
        let d = reweigh(&[0, 1, 1], &[1, 1, 1]).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.instance_weights, vec![1.0; 3]);
    }

    #[test]
    fn fair_range_boundaries() {
        let spd = |v| MetricResult::new(MetricName::StatisticalParityDifference, v, false).within_fair_range;
        let di = |v| MetricResult::new(MetricName::DisparateImpact, v, false).within_fair_range;
        assert!(spd(0.1) && spd(-0.1));
        assert!(!spd(0.101) && !spd(-0.101));
        assert!(di(0.8) && di(1.25));
        assert!(!di(0.799) && !di(1.251));
    }
}
