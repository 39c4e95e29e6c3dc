//! Run configuration: a sectioned TOML file, overridden by command-line
//! flags. Every key is optional; see `riskfair.example.toml`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use riskfair_core::experiment::{ExperimentConfig, MitigationMode, SurfaceMode};
use riskfair_core::explore::{DEFAULT_BINS, DEFAULT_GRID_2D, DEFAULT_GRID_POINTS};
use riskfair_core::models::{ClassifierSpec, Family};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::report::Format;

pub const DEFAULT_SEED: u64 = 42;
/// Non-Hispanic white cutoff used unless the config names another.
pub const NH_WHITE_THRESHOLD: f64 = 59.3;

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub input: InputSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub binarization: BinarizationSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    /// `family` plus any hyperparameters to override.
    pub classifier: Option<toml::Table>,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub density: DensitySection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub county: Option<PathBuf>,
    pub dk: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    /// A dataset written by `synth` (or any file in that layout).
    pub tabular: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BinarizationSection {
    pub target_percentile: Option<f64>,
    pub ge_maps_to_one: Option<bool>,
    #[serde(default)]
    pub protected_thresholds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub test_fraction: Option<f64>,
    pub stratified: Option<bool>,
    pub standardize: Option<bool>,
    pub dk_subsets: Option<Vec<Vec<String>>>,
    pub mitigation: Option<MitigationMode>,
    pub surface: Option<SurfaceMode>,
    pub include_audited_features: Option<bool>,
    pub audited: Option<Vec<String>>,
    pub privileged_value: Option<u8>,
    pub favorable_label: Option<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub families: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub bins: Option<usize>,
    pub grid_points: Option<usize>,
    pub grid_2d: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityOptions {
    pub bins: usize,
    pub grid_points: usize,
    pub grid_2d: (usize, usize),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> AppResult<Self> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn density(&self) -> AppResult<DensityOptions> {
        let d = &self.density;
        let opts = DensityOptions {
            bins: d.bins.unwrap_or(DEFAULT_BINS),
            grid_points: d.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
            grid_2d: d.grid_2d.map(|[a, b]| (a, b)).unwrap_or(DEFAULT_GRID_2D),
        };
        if opts.bins == 0 || opts.grid_points < 2 || opts.grid_2d.0 == 0 || opts.grid_2d.1 == 0 {
            return Err(AppError::Config("density bins and grids must be positive (grid_points >= 2)".into()));
        }
        Ok(opts)
    }

    /// Experiment settings for data whose domain-knowledge columns are
    /// `dk_names`.
    pub fn experiment(&self, dk_names: &[String]) -> AppResult<ExperimentConfig> {
        let seed = self.seed();
        let mut cfg = ExperimentConfig::new(seed, dk_names);
        let b = &self.binarization;
        if let Some(p) = b.target_percentile {
            if !(p > 0.0 && p < 100.0) {
                return Err(AppError::Config(format!("target_percentile = {p} must lie in (0, 100)")));
            }
            cfg.binarization.target_percentile = p;
        }
        if let Some(v) = b.ge_maps_to_one {
            cfg.binarization.ge_maps_to_one = v;
        }
        if dk_names.iter().any(|n| n == "pct_nh_white") {
            cfg.binarization.protected_thresholds.insert("pct_nh_white".into(), NH_WHITE_THRESHOLD);
        }
        for (name, t) in &b.protected_thresholds {
            if !dk_names.contains(name) {
                return Err(AppError::Config(format!("threshold given for unknown column `{name}`")));
            }
            cfg.binarization.protected_thresholds.insert(name.clone(), *t);
        }

        let e = &self.experiment;
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = e.$field.clone() {
                    cfg.$field = v;
                }
            };
        }
        take!(test_fraction);
        take!(stratified);
        take!(standardize);
        take!(dk_subsets);
        take!(mitigation);
        take!(surface);
        take!(include_audited_features);
        take!(privileged_value);
        take!(favorable_label);
        if e.audited.is_some() {
            cfg.audited = e.audited.clone();
        }
        for name in cfg.audited.iter().flatten().chain(cfg.dk_subsets.iter().flatten()) {
            if !dk_names.contains(name) {
                return Err(AppError::Config(format!("unknown domain-knowledge column `{name}`")));
            }
        }

        if let Some(table) = &self.classifier {
            cfg.classifier = classifier_from_table(table, cfg.classifier, seed)?;
        }
        if let Some(families) = &self.compare.families {
            cfg.compare = families
                .iter()
                .map(|f| {
                    let family = parse_family(f)?;
                    let existing = cfg.compare.iter().find(|s| s.family() == family).copied();
                    Ok(existing.unwrap_or_else(|| ClassifierSpec::default_for(family)))
                })
                .collect::<AppResult<_>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_family(s: &str) -> AppResult<Family> {
    Family::parse(s).ok_or_else(|| {
        AppError::Config(format!(
            "unknown classifier family `{s}` (expected one of {})",
            Family::ALL.map(Family::as_str).join(", ")
        ))
    })
}

/// Overlays the keys of `table` on the defaults of its `family` (or of
/// `current` when the family is unchanged or omitted).
pub fn classifier_from_table(table: &toml::Table, current: ClassifierSpec, seed: u64) -> AppResult<ClassifierSpec> {
    let family = match table.get("family") {
        Some(toml::Value::String(s)) => parse_family(s)?,
        Some(other) => return Err(AppError::Config(format!("classifier family must be a string, got {other}"))),
        None => current.family(),
    };
    let base = if family == current.family() {
        current
    } else {
        let spec = ClassifierSpec::default_for(family);
        match family {
            Family::Forest => spec.with_seed(riskfair_core::seed::derive_seed(seed, "forest")),
            Family::LinearSvm => spec.with_seed(riskfair_core::seed::derive_seed(seed, "svm")),
            _ => spec,
        }
    };
    // JSON values carry u64 seeds, which TOML integers cannot
    let serde_json::Value::Object(mut merged) = serde_json::to_value(base)? else {
        unreachable!("classifier specs serialize as maps")
    };
    for (k, v) in table {
        if k != "family" && !merged.contains_key(k) {
            return Err(AppError::Config(format!("`{k}` is not a {} hyperparameter", family.as_str())));
        }
        merged.insert(k.clone(), serde_json::to_value(v)?);
    }
    let spec: ClassifierSpec =
        serde_json::from_value(serde_json::Value::Object(merged)).map_err(|e| AppError::Config(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use riskfair_core::models::logistic::LogisticParams;

    fn dk() -> Vec<String> {
        ["per_capita_income", "pct_age_65_plus", "pct_nh_white"].map(String::from).to_vec()
    }

    #[test]
    fn example_file_restates_the_defaults() {
        let rc = RunConfig::from_toml(include_str!("../../../riskfair.example.toml")).unwrap();
        assert_eq!(rc.experiment(&dk()).unwrap(), RunConfig::default().experiment(&dk()).unwrap());
        let d = rc.density().unwrap();
        assert_eq!((d.bins, d.grid_points, d.grid_2d), (DEFAULT_BINS, DEFAULT_GRID_POINTS, DEFAULT_GRID_2D));
    }

    #[test]
    fn defaults_resolve_to_the_five_subset_grid() {
        let cfg = RunConfig::default().experiment(&dk()).unwrap();
        assert_eq!(cfg.dk_subsets.len(), 5);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.binarization.protected_thresholds["pct_nh_white"], 59.3);
        assert!(!cfg.binarization.protected_thresholds.contains_key("per_capita_income"));
        assert_eq!(cfg.compare.len(), 5);
    }

    #[test]
    fn sections_override_defaults() {
        let text = r#"
seed = 7
[binarization]
target_percentile = 25
[binarization.protected_thresholds]
per_capita_income = 30000
[experiment]
mitigation = "on"
dk_subsets = [[], ["pct_nh_white"]]
[classifier]
family = "logistic"
l2_lambda = 0.5
[compare]
families = ["knn", "tree"]
"#;
        let rc = RunConfig::from_toml(text).unwrap();
        let cfg = rc.experiment(&dk()).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.binarization.target_percentile, 25.0);
        assert_eq!(cfg.binarization.protected_thresholds["per_capita_income"], 30000.0);
        assert_eq!(cfg.mitigation, MitigationMode::On);
        assert_eq!(cfg.dk_subsets.len(), 2);
        assert_eq!(
            cfg.classifier,
            ClassifierSpec::Logistic(LogisticParams { l2_lambda: 0.5, ..LogisticParams::default() })
        );
        assert_eq!(cfg.compare.iter().map(|c| c.family()).collect::<Vec<_>>(), [Family::Knn, Family::Tree]);
    }

    #[test]
    fn bad_keys_and_values_are_config_errors() {
        assert!(RunConfig::from_toml("[experiment]\nbogus = 1\n").is_err());
        let rc = RunConfig::from_toml("[classifier]\nfamily = \"knn\"\nl2_lambda = 1.0\n").unwrap();
        assert!(matches!(rc.experiment(&dk()), Err(AppError::Config(_))));
        let rc = RunConfig::from_toml("[classifier]\nfamily = \"knn\"\nk = 0\n").unwrap();
        assert!(rc.experiment(&dk()).is_err());
        let rc = RunConfig::from_toml("[experiment]\ndk_subsets = [[\"shoe_size\"]]\n").unwrap();
        assert!(matches!(rc.experiment(&dk()), Err(AppError::Config(_))));
    }

    #[test]
    fn forest_seed_derives_from_top_level_seed() {
        let rc = RunConfig::from_toml("seed = 9\n[classifier]\nfamily = \"forest\"\nn_trees = 3\n").unwrap();
        let cfg = rc.experiment(&dk()).unwrap();
        match cfg.classifier {
            ClassifierSpec::Forest(p) => {
                assert_eq!(p.n_trees, 3);
                assert_eq!(p.seed, riskfair_core::seed::derive_seed(9, "forest"));
            }
            other => panic!("{other:?}"),
        }
    }
}
