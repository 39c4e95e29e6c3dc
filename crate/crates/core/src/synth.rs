//! Synthetic datasets with a controlled dependence between a binary group
//! and the label, plus the closed-form label metrics they should exhibit.
//!
//! Generation per row: group `g` and a latent fair class `z` are independent
//! fair coins. Features are drawn around `±separation` according to `z`. The
//! observed label starts at `z` and is flipped towards the group's favoured
//! class with probability `2·delta` (`g = 1`: 0 → 1, `g = 0`: 1 → 0), so
//! `P(y=1 | g=1) = 0.5 + delta` and `P(y=1 | g=0) = 0.5 − delta`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::fairness::GroupDefinition;
use crate::matrix::Matrix;

/// Name of the protected column in generated datasets.
pub const GROUP_COLUMN: &str = "group";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    /// Bias strength in [0, 0.5).
    pub delta: f64,
    pub d_informative: usize,
    pub d_noise: usize,
    /// Magnitude of the class-conditional feature means.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { n: 1000, delta: 0.0, d_informative: 2, d_noise: 2, separation: 1.0, seed: 42 }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.delta) {
            return Err(Error::Config(format!("delta = {} must lie in [0, 0.5)", self.delta)));
        }
        if self.n < 4 {
            return Err(Error::Config(format!("n = {} must be at least 4", self.n)));
        }
        if !self.separation.is_finite() {
            return Err(Error::Config("separation must be finite".into()));
        }
        Ok(())
    }

    pub fn feature_names(&self) -> Vec<String> {
        (1..=self.d_informative)
            .map(|j| format!("informative_{j}"))
            .chain((1..=self.d_noise).map(|j| format!("noise_{j}")))
            .collect()
    }
}

pub fn generate_biased(spec: &SynthSpec) -> Result<TabularDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.d_informative + spec.d_noise;
    let mut data = Vec::with_capacity(spec.n * d);
    let mut y = Vec::with_capacity(spec.n);
    let mut g = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let group: u8 = u8::from(rng.random::<bool>());
        let latent: u8 = u8::from(rng.random::<bool>());
        let flip = rng.random::<f64>() < 2.0 * spec.delta;
        let label = match (group, latent) {
            (1, 0) if flip => 1,
            (0, 1) if flip => 0,
            _ => latent,
        };
        let mean = if latent == 1 { spec.separation } else { -spec.separation };
        for _ in 0..spec.d_informative {
            let e: f64 = StandardNormal.sample(&mut rng);
            data.push(mean + e);
        }
        for _ in 0..spec.d_noise {
            let e: f64 = StandardNormal.sample(&mut rng);
            data.push(e);
        }
        y.push(label);
        g.push(group);
    }
    let mut protected = BTreeMap::new();
    protected.insert(String::from(GROUP_COLUMN), g);
    TabularDataset::new(
        spec.feature_names(),
        Matrix::from_vec(spec.n, d, data)?,
        y,
        protected,
        None,
        (1..=spec.n).map(|i| format!("synth-{i:06}")).collect(),
    )
}

/// Population label metrics `(spd, di)` under `gd`.
pub fn expected_label_metrics(spec: &SynthSpec, gd: &GroupDefinition) -> Result<(f64, f64)> {
    spec.validate()?;
    let p_one = |group: u8| if group == 1 { 0.5 + spec.delta } else { 0.5 - spec.delta };
    let favorable = |group: u8| {
        if gd.favorable_label == 1 {
            p_one(group)
        } else {
            1.0 - p_one(group)
        }
    };
    let privileged = favorable(gd.privileged_value);
    let unprivileged = favorable(1 - gd.privileged_value);
    Ok((unprivileged - privileged, unprivileged / privileged))
}
