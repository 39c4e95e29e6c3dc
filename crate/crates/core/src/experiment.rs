//! Algorithm comparison, domain-knowledge ablation and the reweighing
//! mitigation grid, assembled into a [`FairnessReport`].
//!
//! Every run shares one seeded train/test split. Cells run sequentially and
//! are stored in canonical order (subset order, then mitigation mode, then
//! audited attribute), so the report does not depend on scheduling.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::fairness::{
    balanced_accuracy, disparate_impact, reweigh, statistical_parity_difference, theil_index, GroupDefinition,
    MetricName, MetricResult,
};
use crate::matrix::Matrix;
use crate::models::{self, classification_scores, ClassificationScores, ClassifierSpec, Family, ModelParams};
use crate::preprocess::{binarize_protected, binarize_target, median, split_indices, BinarizationSpec, SplitIndices};
use crate::seed::derive_seed;

/// A raw numeric column that can join the features and be audited once
/// binarized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedColumn {
    pub name: String,
    pub values: Vec<f64>,
    /// Cutoff used when the configuration names none (before the median).
    pub default_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum Target {
    /// Continuous percentages, binarized at the configured percentile.
    Percent(Vec<f64>),
    /// Labels that are already 0/1.
    Binary(Vec<u8>),
}

/// Complete rows ready for modelling: base explanatory features, the target
/// and the domain-knowledge columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentData {
    pub ids: Vec<String>,
    pub base_names: Vec<String>,
    pub base: Matrix,
    pub target: Target,
    pub dk: Vec<NamedColumn>,
}

impl ExperimentData {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ids.len();
        if n == 0 {
            return Err(Error::InvalidDataset("experiment data has no rows".into()));
        }
        if self.base.rows() != n {
            return Err(Error::dim("experiment base features", n, self.base.rows()));
        }
        if self.base_names.len() != self.base.cols() {
            return Err(Error::dim("experiment base names", self.base.cols(), self.base_names.len()));
        }
        if !self.base.all_finite() {
            return Err(Error::InvalidDataset("non-finite base feature".into()));
        }
        let target_len = match &self.target {
            Target::Percent(v) => v.len(),
            Target::Binary(v) => v.len(),
        };
        if target_len != n {
            return Err(Error::dim("experiment target", n, target_len));
        }
        for c in &self.dk {
            if c.values.len() != n {
                return Err(Error::dim("experiment domain-knowledge column", n, c.values.len()));
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("non-finite value in `{}`", c.name)));
            }
        }
        Ok(())
    }

    pub fn dk_names(&self) -> Vec<String> {
        self.dk.iter().map(|c| c.name.clone()).collect()
    }

    fn dk_column(&self, name: &str) -> Result<&NamedColumn> {
        self.dk
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Config(format!("unknown domain-knowledge column `{name}`")))
    }

    /// Features of a synthetic dataset become the base block and each
    /// protected column becomes a 0/1 domain-knowledge column cut at 0.5.
    pub fn from_tabular(ds: &TabularDataset) -> Self {
        ExperimentData {
            ids: ds.ids().to_vec(),
            base_names: ds.feature_names().to_vec(),
            base: ds.x().clone(),
            target: Target::Binary(ds.y().to_vec()),
            dk: ds
                .protected_columns()
                .iter()
                .map(|(name, v)| NamedColumn {
                    name: name.clone(),
                    values: v.iter().map(|&b| f64::from(b)).collect(),
                    default_threshold: Some(0.5),
                })
                .collect(),
        }
    }

    /// Base features plus the named domain-knowledge columns, in the order
    /// given.
    pub fn features(&self, extra: &[String]) -> Result<(Vec<String>, Matrix)> {
        let mut names = self.base_names.clone();
        let mut cols = Vec::with_capacity(extra.len());
        for e in extra {
            cols.push(self.dk_column(e)?.values.clone());
            names.push(e.clone());
        }
        let x = self.base.hstack(&Matrix::from_columns(self.len(), &cols)?)?;
        Ok((names, x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mitigation {
    Off,
    On,
}

impl Mitigation {
    pub fn as_str(self) -> &'static str {
        match self {
            Mitigation::Off => "off",
            Mitigation::On => "on",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MitigationMode {
    Off,
    On,
    Both,
}

impl MitigationMode {
    pub fn modes(self) -> &'static [Mitigation] {
        match self {
            MitigationMode::Off => &[Mitigation::Off],
            MitigationMode::On => &[Mitigation::On],
            MitigationMode::Both => &[Mitigation::Off, Mitigation::On],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Test,
    Train,
}

impl Surface {
    pub fn as_str(self) -> &'static str {
        match self {
            Surface::Test => "test",
            Surface::Train => "train",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceMode {
    Test,
    Train,
    Both,
}

impl SurfaceMode {
    pub fn surfaces(self) -> &'static [Surface] {
        match self {
            SurfaceMode::Test => &[Surface::Test],
            SurfaceMode::Train => &[Surface::Train],
            SurfaceMode::Both => &[Surface::Test, Surface::Train],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Top-level seed; split, forest and SVM seeds derive from it.
    pub seed: u64,
    pub test_fraction: f64,
    pub stratified: bool,
    pub standardize: bool,
    pub binarization: BinarizationSpec,
    /// Each entry is a set of domain-knowledge column names; `[]` is the
    /// no-domain-knowledge baseline.
    pub dk_subsets: Vec<Vec<String>>,
    pub mitigation: MitigationMode,
    pub surface: SurfaceMode,
    /// Keep the audited attribute among the model features.
    pub include_audited_features: bool,
    /// Audit these attributes in every subset instead of the default rule
    /// (the subset's own columns; all columns for the empty subset).
    pub audited: Option<Vec<String>>,
    pub privileged_value: u8,
    pub favorable_label: u8,
    /// Classifier for the ablation and the mitigation grid.
    pub classifier: ClassifierSpec,
    /// Families in the algorithm comparison.
    pub compare: Vec<ClassifierSpec>,
}

impl ExperimentConfig {
    /// Defaults with seeded families derived from `seed`, and the standard
    /// subset list `[], {each column}, {all columns}` over `dk_names`.
    pub fn new(seed: u64, dk_names: &[String]) -> Self {
        let mut dk_subsets: Vec<Vec<String>> = alloc::vec![Vec::new()];
        dk_subsets.extend(dk_names.iter().map(|n| alloc::vec![n.clone()]));
        if dk_names.len() > 1 {
            dk_subsets.push(dk_names.to_vec());
        }
        let mut cfg = ExperimentConfig {
            seed,
            test_fraction: 0.3,
            stratified: true,
            standardize: true,
            binarization: BinarizationSpec::default(),
            dk_subsets,
            mitigation: MitigationMode::Both,
            surface: SurfaceMode::Both,
            include_audited_features: true,
            audited: None,
            privileged_value: 1,
            favorable_label: 0,
            classifier: ClassifierSpec::default_for(Family::Logistic),
            compare: Family::ALL.iter().map(|&f| ClassifierSpec::default_for(f)).collect(),
        };
        cfg.reseed(seed);
        cfg
    }

    /// Sets the top-level seed and rederives family seeds.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        let derive = |s: ClassifierSpec| match s.family() {
            Family::Forest => s.with_seed(derive_seed(seed, "forest")),
            Family::LinearSvm => s.with_seed(derive_seed(seed, "svm")),
            _ => s,
        };
        self.classifier = derive(self.classifier);
        self.compare = self.compare.iter().map(|&s| derive(s)).collect();
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, "split")
    }

    pub fn group(&self, attribute: &str) -> GroupDefinition {
        GroupDefinition::new(attribute).with_privileged(self.privileged_value).with_favorable(self.favorable_label)
    }

    pub fn validate(&self) -> Result<()> {
        if self.privileged_value > 1 || self.favorable_label > 1 {
            return Err(Error::Config("privileged value and favorable label must be 0/1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!("test_fraction = {} must lie in (0, 1)", self.test_fraction)));
        }
        self.classifier.validate()?;
        for c in &self.compare {
            c.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedColumn {
    pub name: String,
    pub threshold: f64,
    /// "config", "column default" or "median".
    pub threshold_source: String,
    pub values: Vec<u8>,
}

/// Labels, binarized protected columns and the shared split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedData {
    pub labels: Vec<u8>,
    pub target_threshold: Option<f64>,
    pub protected: Vec<ProtectedColumn>,
    pub split_seed: u64,
    pub split: SplitIndices,
}

impl PreparedData {
    pub fn protected(&self, name: &str) -> Result<&ProtectedColumn> {
        self.protected
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Config(format!("unknown protected attribute `{name}`")))
    }
}

pub fn prepare(data: &ExperimentData, cfg: &ExperimentConfig) -> Result<PreparedData> {
    data.validate()?;
    cfg.validate()?;
    let (labels, target_threshold) = match &data.target {
        Target::Percent(v) => {
            let (l, t) = binarize_target(v, cfg.binarization.target_percentile)?;
            (l, Some(t))
        }
        Target::Binary(v) => {
            if v.iter().any(|&b| b > 1) {
                return Err(Error::InvalidDataset("binary target holds a value other than 0/1".into()));
            }
            (v.clone(), None)
        }
    };
    let mut protected = Vec::with_capacity(data.dk.len());
    for c in &data.dk {
        let (threshold, source) = match (cfg.binarization.protected_thresholds.get(&c.name), c.default_threshold) {
            (Some(&t), _) => (t, "config"),
            (None, Some(t)) => (t, "column default"),
            (None, None) => (median(&c.values)?, "median"),
        };
        if !threshold.is_finite() {
            return Err(Error::Config(format!("threshold for `{}` is not finite", c.name)));
        }
        protected.push(ProtectedColumn {
            name: c.name.clone(),
            threshold,
            threshold_source: source.to_string(),
            values: binarize_protected(&c.values, threshold, cfg.binarization.ge_maps_to_one)?,
        });
    }
    let split_seed = cfg.split_seed();
    let split = split_indices(&labels, cfg.test_fraction, split_seed, cfg.stratified)?;
    Ok(PreparedData { labels, target_threshold, protected, split_seed, split })
}

fn pick<T: Copy>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmRow {
    pub family: Family,
    pub spec: ClassifierSpec,
    pub scores: ClassificationScores,
}

/// Each configured family trained on the training split of the base
/// features (no domain knowledge) and scored on the test split.
pub fn compare_algorithms(
    data: &ExperimentData,
    prepared: &PreparedData,
    cfg: &ExperimentConfig,
) -> Result<Vec<AlgorithmRow>> {
    let x_train = data.base.select_rows(&prepared.split.train);
    let x_test = data.base.select_rows(&prepared.split.test);
    let y_train = pick(&prepared.labels, &prepared.split.train);
    let y_test = pick(&prepared.labels, &prepared.split.test);
    let w = alloc::vec![1.0; y_train.len()];
    cfg.compare
        .iter()
        .map(|spec| {
            let model = models::fit(spec, &data.base_names, &x_train, &y_train, &w, cfg.standardize)?;
            let y_hat = model.predict(&x_test)?;
            Ok(AlgorithmRow { family: spec.family(), spec: *spec, scores: classification_scores(&y_test, &y_hat)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub subset: Vec<String>,
    pub feature_count: usize,
    pub scores: ClassificationScores,
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub warnings: Vec<String>,
}

/// Orders each subset by the data's column order and drops repeats.
pub fn canonical_subsets(data: &ExperimentData, subsets: &[Vec<String>]) -> Result<(Vec<Vec<String>>, Vec<String>)> {
    let order = data.dk_names();
    let mut out: Vec<Vec<String>> = Vec::new();
    let mut warnings = Vec::new();
    for s in subsets {
        for name in s {
            if !order.contains(name) {
                return Err(Error::Config(format!("subset names unknown column `{name}`")));
            }
        }
        let mut canon: Vec<String> = order.iter().filter(|n| s.contains(n)).cloned().collect();
        canon.dedup();
        if out.contains(&canon) {
            warnings.push(format!("duplicate domain-knowledge subset [{}] ignored", canon.join(", ")));
        } else {
            out.push(canon);
        }
    }
    Ok((out, warnings))
}

fn converged(params: &ModelParams) -> Option<bool> {
    match params {
        ModelParams::Logistic(m) => Some(m.converged),
        _ => None,
    }
}

/// The configured classifier trained per domain-knowledge subset; the empty
/// subset is the baseline row.
pub fn run_ablation(data: &ExperimentData, prepared: &PreparedData, cfg: &ExperimentConfig) -> Result<AblationTable> {
    let (subsets, warnings) = canonical_subsets(data, &cfg.dk_subsets)?;
    let y_train = pick(&prepared.labels, &prepared.split.train);
    let y_test = pick(&prepared.labels, &prepared.split.test);
    let w = alloc::vec![1.0; y_train.len()];
    let mut rows = Vec::with_capacity(subsets.len());
    for subset in subsets {
        let (names, x) = data.features(&subset)?;
        let model =
            models::fit(&cfg.classifier, &names, &x.select_rows(&prepared.split.train), &y_train, &w, cfg.standardize)?;
        let y_hat = model.predict(&x.select_rows(&prepared.split.test))?;
        rows.push(AblationRow {
            feature_count: names.len(),
            scores: classification_scores(&y_test, &y_hat)?,
            converged: converged(&model.params),
            subset,
        });
    }
    Ok(AblationTable { rows, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MetricOutcome {
    Defined(MetricResult),
    Undefined { name: MetricName, reason: String },
}

impl MetricOutcome {
    pub fn name(&self) -> MetricName {
        match self {
            MetricOutcome::Defined(m) => m.name,
            MetricOutcome::Undefined { name, .. } => *name,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            MetricOutcome::Defined(m) => Some(m.value),
            MetricOutcome::Undefined { .. } => None,
        }
    }

    pub fn from_result(name: MetricName, r: Result<MetricResult>) -> Self {
        match r {
            Ok(m) => MetricOutcome::Defined(m),
            Err(e) => MetricOutcome::Undefined { name, reason: e.to_string() },
        }
    }
}

/// All four metrics for one evaluation surface. `weights` apply to the
/// label-based parity metrics only.
pub fn audit(
    y: &[u8],
    y_hat: &[u8],
    protected: &[u8],
    gd: &GroupDefinition,
    surface: Surface,
    weights: Option<&[f64]>,
) -> Vec<MetricOutcome> {
    // test surface: parity of predictions; train surface: parity of labels
    let outcomes = match surface {
        Surface::Test => y_hat,
        Surface::Train => y,
    };
    alloc::vec![
        MetricOutcome::from_result(MetricName::BalancedAccuracy, balanced_accuracy(y, y_hat)),
        MetricOutcome::from_result(
            MetricName::StatisticalParityDifference,
            statistical_parity_difference(outcomes, protected, gd, weights),
        ),
        MetricOutcome::from_result(MetricName::DisparateImpact, disparate_impact(outcomes, protected, gd, weights),),
        MetricOutcome::from_result(MetricName::TheilIndex, theil_index(y, y_hat)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMetrics {
    pub surface: Surface,
    pub metrics: Vec<MetricOutcome>,
}

impl SurfaceMetrics {
    pub fn get(&self, name: MetricName) -> Option<&MetricOutcome> {
        self.metrics.iter().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweighSummary {
    /// `[group][class]`; `None` for an empty cell.
    pub cell_weights: [[Option<f64>; 2]; 2],
    pub degenerate: bool,
    pub weight_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub attribute: String,
    pub group: GroupDefinition,
    pub threshold: f64,
    pub feature_count: usize,
    pub test_scores: Option<ClassificationScores>,
    pub converged: Option<bool>,
    pub reweigh: Option<ReweighSummary>,
    pub surfaces: Vec<SurfaceMetrics>,
    pub notes: Vec<String>,
}

impl GridCell {
    pub fn metric(&self, surface: Surface, name: MetricName) -> Option<&MetricOutcome> {
        self.surfaces.iter().find(|s| s.surface == surface)?.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub subset: Vec<String>,
    pub mitigation: Mitigation,
    pub cells: Vec<GridCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub subset: Vec<String>,
    pub attribute: String,
    pub surface: Surface,
    pub metric: MetricName,
    #[serde(with = "crate::serde_float::option")]
    pub before: Option<f64>,
    #[serde(with = "crate::serde_float::option")]
    pub after: Option<f64>,
}

impl MetricDelta {
    pub fn delta(&self) -> Option<f64> {
        Some(self.after? - self.before?)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridReport {
    pub runs: Vec<GridRun>,
    pub warnings: Vec<String>,
}

impl GridReport {
    pub fn run(&self, subset: &[String], mitigation: Mitigation) -> Option<&GridRun> {
        self.runs.iter().find(|r| r.subset == subset && r.mitigation == mitigation)
    }

    pub fn cell(&self, subset: &[String], mitigation: Mitigation, attribute: &str) -> Option<&GridCell> {
        self.run(subset, mitigation)?.cells.iter().find(|c| c.attribute == attribute)
    }

    /// Before/after pairs for every (subset, attribute, surface, metric)
    /// present with mitigation both off and on.
    pub fn deltas(&self) -> Vec<MetricDelta> {
        let mut out = Vec::new();
        for before_run in self.runs.iter().filter(|r| r.mitigation == Mitigation::Off) {
            let Some(after_run) = self.run(&before_run.subset, Mitigation::On) else {
                continue;
            };
            for before in &before_run.cells {
                let Some(after) = after_run.cells.iter().find(|c| c.attribute == before.attribute) else {
                    continue;
                };
                for s in &before.surfaces {
                    for m in &s.metrics {
                        out.push(MetricDelta {
                            subset: before_run.subset.clone(),
                            attribute: before.attribute.clone(),
                            surface: s.surface,
                            metric: m.name(),
                            before: m.value(),
                            after: after.metric(s.surface, m.name()).and_then(MetricOutcome::value),
                        });
                    }
                }
            }
        }
        out
    }
}

fn audited_for(data: &ExperimentData, cfg: &ExperimentConfig, subset: &[String]) -> Vec<String> {
    match &cfg.audited {
        Some(a) => a.clone(),
        None if subset.is_empty() => data.dk_names(),
        None => subset.to_vec(),
    }
}

/// Trains and audits one (subset, attribute, mitigation) cell. Training and
/// metric failures become notes on the cell.
pub fn run_cell(
    data: &ExperimentData,
    prepared: &PreparedData,
    cfg: &ExperimentConfig,
    subset: &[String],
    attribute: &str,
    mitigation: Mitigation,
) -> Result<GridCell> {
    let protected = prepared.protected(attribute)?;
    let gd = cfg.group(attribute);
    let extra: Vec<String> =
        subset.iter().filter(|s| cfg.include_audited_features || s.as_str() != attribute).cloned().collect();
    let (names, x) = data.features(&extra)?;
    let (train, test) = (&prepared.split.train, &prepared.split.test);
    let y_train = pick(&prepared.labels, train);
    let y_test = pick(&prepared.labels, test);
    let g_train = pick(&protected.values, train);
    let g_test = pick(&protected.values, test);

    let mut cell = GridCell {
        attribute: attribute.to_string(),
        group: gd.clone(),
        threshold: protected.threshold,
        feature_count: names.len(),
        test_scores: None,
        converged: None,
        reweigh: None,
        surfaces: Vec::new(),
        notes: Vec::new(),
    };

    let weights = match mitigation {
        Mitigation::Off => None,
        Mitigation::On => {
            let r = reweigh(&y_train, &g_train)?;
            if r.degenerate {
                cell.notes.push(format!(
                    "reweighing is degenerate for `{attribute}` (single group or class); weights left at 1"
                ));
            }
            cell.reweigh = Some(ReweighSummary {
                cell_weights: r.cell_weights,
                degenerate: r.degenerate,
                weight_sum: r.instance_weights.iter().sum(),
            });
            Some(r.instance_weights)
        }
    };
    let unit;
    let fit_w: &[f64] = match &weights {
        Some(w) => w,
        None => {
            unit = alloc::vec![1.0; y_train.len()];
            &unit
        }
    };
    let x_train = x.select_rows(train);
    let x_test = x.select_rows(test);
    let model = match models::fit(&cfg.classifier, &names, &x_train, &y_train, fit_w, cfg.standardize) {
        Ok(m) => m,
        Err(e) => {
            cell.notes.push(format!("training failed: {e}"));
            return Ok(cell);
        }
    };
    cell.converged = converged(&model.params);
    if cell.converged == Some(false) {
        cell.notes.push("optimizer stopped at max_iter before reaching tol".into());
    }
    let yhat_test = model.predict(&x_test)?;
    cell.test_scores = Some(classification_scores(&y_test, &yhat_test)?);
    for &surface in cfg.surface.surfaces() {
        let metrics = match surface {
            Surface::Test => audit(&y_test, &yhat_test, &g_test, &gd, surface, None),
            Surface::Train => {
                let yhat_train = model.predict(&x_train)?;
                audit(&y_train, &yhat_train, &g_train, &gd, surface, weights.as_deref())
            }
        };
        for m in &metrics {
            if let MetricOutcome::Undefined { name, reason } = m {
                cell.notes.push(format!("{} on {} surface undefined: {reason}", name.as_str(), surface.as_str()));
            }
        }
        cell.surfaces.push(SurfaceMetrics { surface, metrics });
    }
    Ok(cell)
}

pub fn run_mitigation_grid(
    data: &ExperimentData,
    prepared: &PreparedData,
    cfg: &ExperimentConfig,
) -> Result<GridReport> {
    let (subsets, warnings) = canonical_subsets(data, &cfg.dk_subsets)?;
    let mut runs = Vec::new();
    for subset in &subsets {
        let attributes = audited_for(data, cfg, subset);
        for &mitigation in cfg.mitigation.modes() {
            let cells = attributes
                .iter()
                .map(|a| run_cell(data, prepared, cfg, subset, a, mitigation))
                .collect::<Result<Vec<_>>>()?;
            runs.push(GridRun { subset: subset.clone(), mitigation, cells });
        }
    }
    Ok(GridReport { runs, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Content hash of the inputs, supplied by the caller.
    pub fingerprint: String,
    pub rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub base_features: usize,
    pub label_counts: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedThreshold {
    pub name: String,
    pub threshold: f64,
    pub source: String,
    pub privileged_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub config: ExperimentConfig,
    pub provenance: Provenance,
    pub split_seed: u64,
    pub target_threshold: Option<f64>,
    pub protected_thresholds: Vec<ResolvedThreshold>,
    pub comparison: Vec<AlgorithmRow>,
    pub ablation: AblationTable,
    pub grid: GridReport,
}

/// Which parts of the experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub comparison: bool,
    pub ablation: bool,
    pub grid: bool,
}

impl Stages {
    pub const ALL: Stages = Stages { comparison: true, ablation: true, grid: true };
}

pub fn run_experiment(
    data: &ExperimentData,
    cfg: &ExperimentConfig,
    fingerprint: &str,
    stages: Stages,
) -> Result<FairnessReport> {
    let prepared = prepare(data, cfg)?;
    let comparison = if stages.comparison { compare_algorithms(data, &prepared, cfg)? } else { Vec::new() };
    let ablation = if stages.ablation { run_ablation(data, &prepared, cfg)? } else { AblationTable::default() };
    let grid = if stages.grid { run_mitigation_grid(data, &prepared, cfg)? } else { GridReport::default() };
    let ones = prepared.labels.iter().filter(|&&l| l == 1).count();
    let mut resolved_cfg = cfg.clone();
    resolved_cfg.binarization.resolved_target_threshold = prepared.target_threshold;
    resolved_cfg.binarization.protected_thresholds =
        prepared.protected.iter().map(|p| (p.name.clone(), p.threshold)).collect::<BTreeMap<_, _>>();
    Ok(FairnessReport {
        config: resolved_cfg,
        provenance: Provenance {
            fingerprint: fingerprint.to_string(),
            rows: data.len(),
            train_rows: prepared.split.train.len(),
            test_rows: prepared.split.test.len(),
            base_features: data.base_names.len(),
            label_counts: [prepared.labels.len() - ones, ones],
        },
        split_seed: prepared.split_seed,
        target_threshold: prepared.target_threshold,
        protected_thresholds: prepared
            .protected
            .iter()
            .map(|p| ResolvedThreshold {
                name: p.name.clone(),
                threshold: p.threshold,
                source: p.threshold_source.clone(),
                privileged_count: p.values.iter().filter(|&&v| v == cfg.privileged_value).count(),
            })
            .collect(),
        comparison,
        ablation,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_biased, SynthSpec, GROUP_COLUMN};
    use alloc::vec;

    fn small_cfg(data: &ExperimentData) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(7, &data.dk_names());
        cfg.compare = vec![ClassifierSpec::default_for(Family::Logistic)];
        cfg
    }

    #[test]
    fn separable_fixture_predictions_survive_reweighing() {
        // g and y exactly independent within the whole set and both partitions
        let n = 40;
        let y: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let g: Vec<f64> = (0..n).map(|i| f64::from(u8::from((i / 2) % 2 == 0))).collect();
        let base: Vec<f64> = (0..n).map(|i| if y[i] == 1 { 1.0 } else { -1.0 } + (i % 5) as f64 * 0.1).collect();
        let data = ExperimentData {
            ids: (0..n).map(|i| format!("r{i}")).collect(),
            base_names: vec!["f".into()],
            base: Matrix::from_columns(n, &[base]).unwrap(),
            target: Target::Binary(y),
            dk: vec![NamedColumn { name: "g".into(), values: g, default_threshold: Some(0.5) }],
        };
        let mut cfg = small_cfg(&data);
        cfg.dk_subsets = vec![vec![]];
        let prepared = prepare(&data, &cfg).unwrap();
        let before = run_cell(&data, &prepared, &cfg, &[], "g", Mitigation::Off).unwrap();
        let after = run_cell(&data, &prepared, &cfg, &[], "g", Mitigation::On).unwrap();
        let rw = after.reweigh.as_ref().unwrap();
        // all four cells populated, so the weights preserve the total mass
        assert!((rw.weight_sum - prepared.split.train.len() as f64).abs() < 1e-9);
        // a separable problem is classified perfectly either way
        for c in [&before, &after] {
            assert_eq!(c.test_scores.as_ref().unwrap().accuracy, 1.0);
        }
        let spd =
            |c: &GridCell| c.metric(Surface::Test, MetricName::StatisticalParityDifference).unwrap().value().unwrap();
        assert_eq!(spd(&before), spd(&after));
    }

    #[test]
    fn grid_is_complete_and_ordered() {
        let ds = generate_biased(&SynthSpec { n: 300, delta: 0.2, seed: 5, ..Default::default() }).unwrap();
        let data = ExperimentData::from_tabular(&ds);
        let cfg = small_cfg(&data);
        let report = run_experiment(&data, &cfg, "x", Stages::ALL).unwrap();
        // subsets: [], [group] (a single column has no separate "all" subset)
        assert_eq!(report.grid.runs.len(), 2 * 2);
        for run in &report.grid.runs {
            assert_eq!(run.cells.len(), 1);
            for cell in &run.cells {
                assert_eq!(cell.surfaces.len(), 2);
                for s in &cell.surfaces {
                    assert_eq!(s.metrics.len(), 4);
                }
            }
        }
        assert_eq!(report.grid.runs[0].mitigation, Mitigation::Off);
        assert_eq!(report.grid.runs[1].mitigation, Mitigation::On);
        assert_eq!(report.provenance.test_rows, 90);
        let on = report.grid.cell(&[], Mitigation::On, GROUP_COLUMN).unwrap();
        let train_spd = on.metric(Surface::Train, MetricName::StatisticalParityDifference).unwrap();
        assert!(train_spd.value().unwrap().abs() < 1e-9);
        assert!(!report.grid.deltas().is_empty());
    }

    #[test]
    fn duplicate_subsets_warn() {
        let ds = generate_biased(&SynthSpec { n: 100, ..Default::default() }).unwrap();
        let data = ExperimentData::from_tabular(&ds);
        let mut cfg = small_cfg(&data);
        cfg.dk_subsets = vec![vec![], vec![GROUP_COLUMN.into()], vec![]];
        let prepared = prepare(&data, &cfg).unwrap();
        let t = run_ablation(&data, &prepared, &cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.warnings.len(), 1);
        cfg.dk_subsets = vec![vec![]];
        assert_eq!(run_ablation(&data, &prepared, &cfg).unwrap().rows.len(), 1);
    }

    #[test]
    fn empty_data_is_rejected() {
        let data = ExperimentData {
            ids: vec![],
            base_names: vec![],
            base: Matrix::zeros(0, 0),
            target: Target::Binary(vec![]),
            dk: vec![],
        };
        let cfg = ExperimentConfig::new(1, &[]);
        assert!(run_experiment(&data, &cfg, "", Stages::ALL).is_err());
    }
}
