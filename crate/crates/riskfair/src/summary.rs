//! Result documents for the single-step commands.

use std::fmt::Write as _;

use riskfair_core::experiment::{MetricOutcome, SurfaceMetrics};
use riskfair_core::explore::CorrelationMatrix;
use riskfair_core::fairness::GroupDefinition;
use riskfair_core::models::{ClassificationScores, ClassifierSpec};
use riskfair_core::synth::SynthSpec;
use serde::Serialize;

use crate::report::{csv_table, fmt_outcome, fmt_range, fmt_sig, score_cells, Render};

const SCORE_HEADER: [&str; 8] = ["accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn"];

fn md_kv(out: &mut String, rows: &[(&str, String)]) {
    out.push_str("| setting | value |\n|---|---|\n");
    for (k, v) in rows {
        let _ = writeln!(out, "| {k} | {} |", v.replace('|', "\\|"));
    }
    out.push('\n');
}

fn md_rows(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}|", vec!["---"; header.len()].join("|"));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

fn opt_sig(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_else(|| "n/a".into())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub schema: String,
    pub fingerprint: String,
    pub parsed: usize,
    pub matched: Option<usize>,
    pub unmatched: Option<usize>,
    pub dropped: usize,
    pub kept: usize,
}

impl IngestSummary {
    fn rows(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_else(|| "n/a".into());
        vec![
            ("schema", self.schema.clone()),
            ("input fingerprint", self.fingerprint.clone()),
            ("records parsed", self.parsed.to_string()),
            ("domain-knowledge matches", opt(self.matched)),
            ("domain-knowledge misses", opt(self.unmatched)),
            ("incomplete rows dropped", self.dropped.to_string()),
            ("records kept", self.kept.to_string()),
        ]
    }
}

impl Render for IngestSummary {
    fn markdown(&self) -> String {
        let mut out = String::from("# Ingest\n\n");
        md_kv(&mut out, &self.rows());
        out.push_str("Clean table: `clean.csv`\n");
        out
    }

    fn tables(&self) -> Vec<(String, String)> {
        let rows: Vec<Vec<String>> = self.rows().into_iter().map(|(k, v)| vec![k.to_string(), v]).collect();
        vec![("summary".into(), csv_table(&["key", "value"], &rows))]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEntry {
    pub column: String,
    /// `(label, size, bandwidth, note)` per risk group.
    pub groups: Vec<(String, usize, Option<f64>, Option<String>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExploreSummary {
    pub fingerprint: String,
    pub rows: usize,
    pub target_threshold: Option<f64>,
    pub group_labels: Vec<String>,
    pub correlation: CorrelationMatrix,
    pub densities: Vec<DensityEntry>,
}

impl ExploreSummary {
    fn correlation_rows(&self) -> Vec<Vec<String>> {
        let c = &self.correlation;
        c.names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let mut r = vec![n.clone()];
                r.extend(c.r[i].iter().map(|v| v.map(fmt_sig).unwrap_or_else(|| "undefined (zero variance)".into())));
                r
            })
            .collect()
    }

    fn density_rows(&self) -> Vec<Vec<String>> {
        self.densities
            .iter()
            .flat_map(|d| {
                d.groups.iter().map(move |(label, size, bw, note)| {
                    vec![
                        d.column.clone(),
                        label.clone(),
                        size.to_string(),
                        opt_sig(*bw),
                        note.clone().unwrap_or_default(),
                    ]
                })
            })
            .collect()
    }
}

impl Render for ExploreSummary {
    fn markdown(&self) -> String {
        let mut out = String::from("# Exploratory analysis\n\n");
        md_kv(
            &mut out,
            &[
                ("input fingerprint", self.fingerprint.clone()),
                ("rows", self.rows.to_string()),
                ("target threshold", opt_sig(self.target_threshold)),
            ],
        );
        out.push_str("## Pearson correlation\n\n");
        let mut header = vec![""];
        header.extend(self.correlation.names.iter().map(String::as_str));
        md_rows(&mut out, &header, &self.correlation_rows());
        out.push_str("## Density views\n\nGrids and charts are under `density/`.\n\n");
        md_rows(&mut out, &["column", "group", "size", "bandwidth", "note"], &self.density_rows());
        out
    }

    fn tables(&self) -> Vec<(String, String)> {
        let mut header = vec![""];
        header.extend(self.correlation.names.iter().map(String::as_str));
        vec![
            ("correlation".into(), csv_table(&header, &self.correlation_rows())),
            ("bandwidths".into(), csv_table(&["column", "group", "size", "bandwidth", "note"], &self.density_rows())),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub seed: u64,
    pub split_seed: u64,
    pub fingerprint: String,
    pub spec: ClassifierSpec,
    pub features: Vec<String>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub target_threshold: Option<f64>,
    pub converged: Option<bool>,
    pub scores: ClassificationScores,
    pub model_file: String,
}

impl TrainSummary {
    fn rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("split seed", self.split_seed.to_string()),
            ("input fingerprint", self.fingerprint.clone()),
            ("classifier", serde_json::to_string(&self.spec).unwrap_or_default()),
            ("features", self.features.len().to_string()),
            ("train / test rows", format!("{} / {}", self.train_rows, self.test_rows)),
            ("target threshold", opt_sig(self.target_threshold)),
            ("converged", self.converged.map(|c| c.to_string()).unwrap_or_else(|| "n/a".into())),
            ("model file", self.model_file.clone()),
        ]
    }
}

impl Render for TrainSummary {
    fn markdown(&self) -> String {
        let mut out = String::from("# Training\n\n");
        md_kv(&mut out, &self.rows());
        out.push_str("## Test scores\n\n");
        md_rows(&mut out, &SCORE_HEADER, &[score_cells(&self.scores)]);
        out
    }

    fn tables(&self) -> Vec<(String, String)> {
        let rows: Vec<Vec<String>> = self.rows().into_iter().map(|(k, v)| vec![k.to_string(), v]).collect();
        vec![
            ("run".into(), csv_table(&["key", "value"], &rows)),
            ("scores".into(), csv_table(&SCORE_HEADER, &[score_cells(&self.scores)])),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCell {
    pub attribute: String,
    pub group: GroupDefinition,
    pub threshold: f64,
    pub surfaces: Vec<SurfaceMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSummary {
    pub seed: u64,
    pub split_seed: u64,
    pub fingerprint: String,
    pub spec: ClassifierSpec,
    pub features: Vec<String>,
    pub test_scores: ClassificationScores,
    pub cells: Vec<AuditCell>,
}

fn metric_rows<'a>(attribute: &'a str, surfaces: &'a [SurfaceMetrics]) -> impl Iterator<Item = Vec<String>> + 'a {
    surfaces.iter().flat_map(move |s| {
        s.metrics.iter().map(move |m: &MetricOutcome| {
            let (value, verdict) = fmt_outcome(m);
            vec![
                attribute.to_string(),
                s.surface.as_str().to_string(),
                m.name().as_str().to_string(),
                value,
                fmt_range(&m.name().fair_range()),
                verdict,
            ]
        })
    })
}

const METRIC_HEADER: [&str; 6] = ["attribute", "surface", "metric", "value", "fair range", "verdict"];

impl Render for AuditSummary {
    fn markdown(&self) -> String {
        let mut out = String::from("# Fairness audit\n\n");
        md_kv(
            &mut out,
            &[
                ("seed", self.seed.to_string()),
                ("split seed", self.split_seed.to_string()),
                ("input fingerprint", self.fingerprint.clone()),
                ("classifier", serde_json::to_string(&self.spec).unwrap_or_default()),
                ("features", self.features.len().to_string()),
            ],
        );
        out.push_str("## Test scores\n\n");
        md_rows(&mut out, &SCORE_HEADER, &[score_cells(&self.test_scores)]);
        out.push_str("## Metrics\n\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "- `{}`: threshold {}, privileged value {}, favorable label {}",
                c.attribute,
                fmt_sig(c.threshold),
                c.group.privileged_value,
                c.group.favorable_label
            );
        }
        out.push('\n');
        let rows: Vec<Vec<String>> = self.cells.iter().flat_map(|c| metric_rows(&c.attribute, &c.surfaces)).collect();
        md_rows(&mut out, &METRIC_HEADER, &rows);
        out
    }

    fn tables(&self) -> Vec<(String, String)> {
        let rows: Vec<Vec<String>> = self.cells.iter().flat_map(|c| metric_rows(&c.attribute, &c.surfaces)).collect();
        vec![
            ("metrics".into(), csv_table(&METRIC_HEADER, &rows)),
            ("scores".into(), csv_table(&SCORE_HEADER, &[score_cells(&self.test_scores)])),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub spec: SynthSpec,
    pub group: GroupDefinition,
    pub expected_spd: f64,
    #[serde(with = "riskfair_core::serde_float")]
    pub expected_di: f64,
    pub empirical: Vec<MetricOutcome>,
    pub data_file: String,
}

impl SynthSummary {
    fn rows(&self) -> Vec<Vec<String>> {
        let find = |i: usize| fmt_outcome(&self.empirical[i]).0;
        vec![
            vec!["statistical_parity_difference".into(), fmt_sig(self.expected_spd), find(0)],
            vec!["disparate_impact".into(), fmt_sig(self.expected_di), find(1)],
        ]
    }
}

impl Render for SynthSummary {
    fn markdown(&self) -> String {
        let s = &self.spec;
        let mut out = String::from("# Synthetic data\n\n");
        md_kv(
            &mut out,
            &[
                ("rows", s.n.to_string()),
                ("delta", fmt_sig(s.delta)),
                ("informative / noise features", format!("{} / {}", s.d_informative, s.d_noise)),
                ("separation", fmt_sig(s.separation)),
                ("seed", s.seed.to_string()),
                ("data file", self.data_file.clone()),
            ],
        );
        out.push_str("## Label metrics (favorable label 0, privileged group 1)\n\n");
        md_rows(&mut out, &["metric", "expected", "empirical"], &self.rows());
        out
    }

    fn tables(&self) -> Vec<(String, String)> {
        vec![("labels".into(), csv_table(&["metric", "expected", "empirical"], &self.rows()))]
    }
}
