//! Pearson correlation and the density summaries behind the exploratory
//! figures (smoothed curve, histogram and 2-D heat map per risk level).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::preprocess::percentile;

pub const DEFAULT_BINS: usize = 30;
pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_GRID_2D: (usize, usize) = (50, 50);

/// Sample Pearson product-moment correlation, clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim("pearson", x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::UndefinedCorrelation(format!("need at least 2 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in correlation input".into()));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance column".into()));
    }
    Ok((sxy / (math::sqrt(sxx) * math::sqrt(syy))).clamp(-1.0, 1.0))
}

/// Symmetric correlation table; `None` marks an undefined pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub r: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.r[i][j]
    }
}

/// Pairwise [`pearson`] over named columns. A zero-variance column yields
/// `None` in its row and column, including the diagonal.
pub fn correlation_matrix(names: &[String], columns: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    if names.len() != columns.len() {
        return Err(Error::dim("correlation_matrix names", columns.len(), names.len()));
    }
    let k = columns.len();
    let mut r = alloc::vec![alloc::vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = match pearson(&columns[i], &columns[j]) {
                Ok(v) if i == j => v.is_finite().then_some(1.0),
                Ok(v) => Some(v),
                Err(Error::UndefinedCorrelation(_)) => None,
                Err(e) => return Err(e),
            };
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    Ok(CorrelationMatrix { names: names.to_vec(), r })
}

/// Histogram counts and (when available) a Gaussian-kernel curve for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDensity {
    pub label: String,
    pub size: usize,
    pub counts: Vec<u64>,
    pub smoothed: Option<Vec<f64>>,
    pub bandwidth: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density1d {
    /// `bins + 1` edges; bins are `[lo, hi)` except the last, which is closed.
    pub bin_edges: Vec<f64>,
    /// Evaluation points of the smoothed curves.
    pub grid: Vec<f64>,
    /// Index 0 is label 0 ("Low"), index 1 is label 1 ("High").
    pub groups: Vec<GroupDensity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density2d {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// `counts[ix][iy]`.
    pub counts: Vec<Vec<u64>>,
    pub n: usize,
}

pub const GROUP_LABELS: [&str; 2] = ["Low", "High"];

fn range(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Bin index under the half-open rule with a closed final bin.
fn bin_of(v: f64, lo: f64, width: f64, bins: usize) -> usize {
    if width <= 0.0 {
        return 0;
    }
    let k = math::floor((v - lo) / width);
    if k < 0.0 {
        0
    } else {
        (k as usize).min(bins - 1)
    }
}

fn edges(lo: f64, width: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|k| lo + width * k as f64).collect()
}

/// Silverman's rule of thumb: 0.9 · min(sd, IQR/1.34) · n^(-1/5).
pub fn silverman_bandwidth(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = math::sqrt(var);
    if !(sd > 0.0) {
        return None;
    }
    let iqr = percentile(values, 75.0).ok()? - percentile(values, 25.0).ok()?;
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Some(0.9 * spread * math::powf(n as f64, -0.2))
}

/// Gaussian KDE with bandwidth `h`, evaluated at `at`.
pub fn gaussian_kde(sample: &[f64], h: f64, at: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (sample.len() as f64 * h * math::sqrt(2.0 * core::f64::consts::PI));
    at.iter()
        .map(|&x| {
            norm * sample
                .iter()
                .map(|&s| {
                    let u = (x - s) / h;
                    math::exp(-0.5 * u * u)
                })
                .sum::<f64>()
        })
        .collect()
}

/// Per-group histogram over the pooled range plus a smoothed curve per group
/// with at least two points and nonzero spread.
pub fn density_1d(values: &[f64], groups: &[u8], bins: usize, grid_points: usize) -> Result<Density1d> {
    if values.len() != groups.len() {
        return Err(Error::dim("density_1d groups", values.len(), groups.len()));
    }
    if values.is_empty() {
        return Err(Error::Domain("density of an empty sample".into()));
    }
    if bins == 0 || grid_points < 2 {
        return Err(Error::Config("need bins >= 1 and grid_points >= 2".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in density input".into()));
    }
    let (lo, hi) = range(values);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };

    let mut members: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (&v, &g) in values.iter().zip(groups) {
        if g > 1 {
            return Err(Error::Domain(format!("group label {g} is not 0/1")));
        }
        members[g as usize].push(v);
    }
    let bandwidths: Vec<Option<f64>> = members.iter().map(|m| silverman_bandwidth(m)).collect();
    let pad = 4.0 * bandwidths.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let (g_lo, g_hi) = if hi > lo || pad > 0.0 { (lo - pad, hi + pad) } else { (lo - 0.5, hi + 0.5) };
    let step = (g_hi - g_lo) / (grid_points - 1) as f64;
    let grid: Vec<f64> = (0..grid_points).map(|k| g_lo + step * k as f64).collect();

    let groups_out = members
        .iter()
        .zip(&bandwidths)
        .zip(GROUP_LABELS)
        .map(|((m, h), label)| {
            let mut counts = alloc::vec![0u64; bins];
            for &v in m {
                counts[bin_of(v, lo, if hi > lo { width } else { 0.0 }, bins)] += 1;
            }
            let (smoothed, note) = match h {
                Some(h) => (Some(gaussian_kde(m, *h, &grid)), None),
                None if m.len() < 2 => (None, Some(format!("smoothing unavailable: group has {} point(s)", m.len()))),
                None => (None, Some(String::from("smoothing unavailable: zero spread"))),
            };
            GroupDensity { label: String::from(label), size: m.len(), counts, smoothed, bandwidth: *h, note }
        })
        .collect();

    Ok(Density1d { bin_edges: edges(lo, width, bins), grid, groups: groups_out })
}

/// Trapezoidal integral of `ys` over the equally spaced `xs`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// `gx × gy` cell counts over the bounding box. An axis with no spread
/// collapses to a single cell.
pub fn density_2d(x: &[f64], y: &[f64], grid: (usize, usize)) -> Result<Density2d> {
    if x.len() != y.len() {
        return Err(Error::dim("density_2d", x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::Domain("2-D density of an empty sample".into()));
    }
    if grid.0 == 0 || grid.1 == 0 {
        return Err(Error::Config("2-D grid needs at least one cell per axis".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in density input".into()));
    }
    let axis = |v: &[f64], cells: usize| {
        let (lo, hi) = range(v);
        if hi > lo {
            let w = (hi - lo) / cells as f64;
            (cells, lo, w, edges(lo, w, cells))
        } else {
            (1, lo, 0.0, alloc::vec![lo, hi])
        }
    };
    let (gx, xlo, xw, x_edges) = axis(x, grid.0);
    let (gy, ylo, yw, y_edges) = axis(y, grid.1);
    let mut counts = alloc::vec![alloc::vec![0u64; gy]; gx];
    for (&a, &b) in x.iter().zip(y) {
        counts[bin_of(a, xlo, xw, gx)][bin_of(b, ylo, yw, gy)] += 1;
    }
    Ok(Density2d { x_edges, y_edges, counts, n: x.len() })
}
