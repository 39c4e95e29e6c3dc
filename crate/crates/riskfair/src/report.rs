//! Report rendering: markdown documents (`md`), pretty JSON (`struct`) and
//! CSV tables (`table`). Output bytes depend only on the report contents.

use std::fmt::Write as _;

use riskfair_core::experiment::{AblationTable, AlgorithmRow, FairnessReport, GridCell, MetricOutcome, Mitigation};
use riskfair_core::fairness::FairRange;
use riskfair_core::models::ClassificationScores;
use serde::{Deserialize, Serialize};

use crate::artifact::OutputDir;
use crate::error::AppResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Md,
    Struct,
    Table,
}

/// Six significant digits, trailing zeros trimmed; `inf`, `-inf`, `nan`
/// for non-finite values.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    // rounding can carry into the next decade
    let s = if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let s = format!("{v:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{e}", trim_zeros(mantissa.to_string()))
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn fmt_range(r: &FairRange) -> String {
    match r {
        FairRange::Interval { lo, hi } => format!("[{}, {}]", fmt_sig(*lo), fmt_sig(*hi)),
        FairRange::Point { value } => fmt_sig(*value),
    }
}

pub fn fmt_outcome(m: &MetricOutcome) -> (String, String) {
    match m {
        MetricOutcome::Defined(r) => {
            (fmt_sig(r.value), if r.within_fair_range { "fair" } else { "unfair" }.to_string())
        }
        MetricOutcome::Undefined { reason, .. } => (format!("undefined ({reason})"), "undefined".to_string()),
    }
}

pub fn subset_label(subset: &[String]) -> String {
    if subset.is_empty() {
        "none".into()
    } else {
        subset.join("+")
    }
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn md_table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}|", header.iter().map(|_| "---").collect::<Vec<_>>().join("|"));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|c| c.replace('|', "\\|")).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out.push('\n');
}

/// A result that can be written in each output format.
pub trait Render: Serialize {
    fn markdown(&self) -> String;
    /// `(file stem, csv text)` pairs.
    fn tables(&self) -> Vec<(String, String)>;
}

/// Writes `value` under `stem` in the requested format and returns the
/// relative paths written.
pub fn emit<T: Render>(out: &mut OutputDir, stem: &str, format: Format, value: &T) -> AppResult<Vec<String>> {
    match format {
        Format::Md => {
            let path = format!("{stem}.md");
            out.write(&path, value.markdown().as_bytes())?;
            Ok(vec![path])
        }
        Format::Struct => {
            let path = format!("{stem}.json");
            let mut text = serde_json::to_string_pretty(value)?;
            text.push('\n');
            out.write(&path, text.as_bytes())?;
            Ok(vec![path])
        }
        Format::Table => {
            let mut paths = Vec::new();
            for (name, text) in value.tables() {
                let path = format!("{stem}_{name}.csv");
                out.write(&path, text.as_bytes())?;
                paths.push(path);
            }
            Ok(paths)
        }
    }
}

const SCORE_HEADER: [&str; 8] = ["accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn"];

pub fn score_cells(s: &ClassificationScores) -> Vec<String> {
    let flag = |v: f64, degenerate: bool| {
        if degenerate {
            format!("{} (degenerate)", fmt_sig(v))
        } else {
            fmt_sig(v)
        }
    };
    vec![
        fmt_sig(s.accuracy),
        flag(s.precision, s.precision_degenerate),
        flag(s.recall, s.recall_degenerate),
        fmt_sig(s.f1),
        s.tp.to_string(),
        s.fp.to_string(),
        s.tn.to_string(),
        s.fn_.to_string(),
    ]
}

fn comparison_rows(rows: &[AlgorithmRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut v = vec![r.family.as_str().to_string()];
            v.extend(score_cells(&r.scores));
            v
        })
        .collect()
}

fn ablation_rows(t: &AblationTable) -> Vec<Vec<String>> {
    t.rows
        .iter()
        .map(|r| {
            let mut v = vec![subset_label(&r.subset), r.feature_count.to_string()];
            v.extend(score_cells(&r.scores));
            v.push(r.converged.map(|c| c.to_string()).unwrap_or_else(|| "n/a".into()));
            v
        })
        .collect()
}

fn grid_rows(report: &FairnessReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for run in &report.grid.runs {
        for cell in &run.cells {
            for s in &cell.surfaces {
                for m in &s.metrics {
                    let (value, verdict) = fmt_outcome(m);
                    let weighted = match m {
                        MetricOutcome::Defined(r) => r.weighted.to_string(),
                        MetricOutcome::Undefined { .. } => String::new(),
                    };
                    rows.push(vec![
                        subset_label(&run.subset),
                        run.mitigation.as_str().to_string(),
                        cell.attribute.clone(),
                        s.surface.as_str().to_string(),
                        m.name().as_str().to_string(),
                        value,
                        fmt_range(&m.name().fair_range()),
                        verdict,
                        weighted,
                    ]);
                }
            }
        }
    }
    rows
}

fn delta_rows(report: &FairnessReport) -> Vec<Vec<String>> {
    let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_else(|| "undefined".into());
    report
        .grid
        .deltas()
        .iter()
        .map(|d| {
            vec![
                subset_label(&d.subset),
                d.attribute.clone(),
                d.surface.as_str().to_string(),
                d.metric.as_str().to_string(),
                opt(d.before),
                opt(d.after),
                opt(d.delta()),
            ]
        })
        .collect()
}

fn cell_markdown(out: &mut String, cell: &GridCell) {
    let g = &cell.group;
    let _ = writeln!(
        out,
        "#### Audited attribute `{}` (threshold {}, privileged value {}, favorable label {})\n",
        cell.attribute,
        fmt_sig(cell.threshold),
        g.privileged_value,
        g.favorable_label
    );
    let _ = writeln!(out, "Model features: {}", cell.feature_count);
    if let Some(c) = cell.converged {
        let _ = writeln!(out, "Optimizer converged: {c}");
    }
    if let Some(s) = &cell.test_scores {
        let _ = writeln!(
            out,
            "Test scores: accuracy {}, precision {}, recall {}, f1 {}",
            fmt_sig(s.accuracy),
            fmt_sig(s.precision),
            fmt_sig(s.recall),
            fmt_sig(s.f1)
        );
    }
    if let Some(rw) = &cell.reweigh {
        let w = |g: usize, c: usize| rw.cell_weights[g][c].map(fmt_sig).unwrap_or_else(|| "empty".into());
        let _ = writeln!(
            out,
            "Reweighing cell weights (group, class): (0,0) {}, (0,1) {}, (1,0) {}, (1,1) {}; total weight {}",
            w(0, 0),
            w(0, 1),
            w(1, 0),
            w(1, 1),
            fmt_sig(rw.weight_sum)
        );
    }
    out.push('\n');
    let rows: Vec<Vec<String>> = cell
        .surfaces
        .iter()
        .flat_map(|s| {
            s.metrics.iter().map(move |m| {
                let (value, verdict) = fmt_outcome(m);
                vec![
                    s.surface.as_str().to_string(),
                    m.name().as_str().to_string(),
                    value,
                    fmt_range(&m.name().fair_range()),
                    verdict,
                ]
            })
        })
        .collect();
    md_table(out, &["surface", "metric", "value", "fair range", "verdict"], &rows);
    for n in &cell.notes {
        let _ = writeln!(out, "- note: {n}");
    }
    if !cell.notes.is_empty() {
        out.push('\n');
    }
}

impl Render for FairnessReport {
    fn markdown(&self) -> String {
        let c = &self.config;
        let p = &self.provenance;
        let mut out = String::from("# Fairness report\n\n## Run\n\n");
        let threshold = self.target_threshold.map(fmt_sig).unwrap_or_else(|| "n/a (binary target)".into());
        let kv = vec![
            vec!["seed".into(), c.seed.to_string()],
            vec!["split seed".into(), self.split_seed.to_string()],
            vec!["data fingerprint".into(), p.fingerprint.clone()],
            vec!["rows (train / test)".into(), format!("{} ({} / {})", p.rows, p.train_rows, p.test_rows)],
            vec!["label counts (0 / 1)".into(), format!("{} / {}", p.label_counts[0], p.label_counts[1])],
            vec!["base features".into(), p.base_features.to_string()],
            vec!["target percentile".into(), fmt_sig(c.binarization.target_percentile)],
            vec!["target threshold".into(), threshold],
            vec!["test fraction".into(), fmt_sig(c.test_fraction)],
            vec!["stratified".into(), c.stratified.to_string()],
            vec!["standardize".into(), c.standardize.to_string()],
            vec!["audited columns as features".into(), c.include_audited_features.to_string()],
            vec![
                "privileged value / favorable label".into(),
                format!("{} / {}", c.privileged_value, c.favorable_label),
            ],
            vec!["grid classifier".into(), serde_json::to_string(&c.classifier).unwrap_or_default()],
        ];
        md_table(&mut out, &["setting", "value"], &kv);

        if !self.protected_thresholds.is_empty() {
            out.push_str("## Protected attribute thresholds\n\n");
            let rows: Vec<Vec<String>> = self
                .protected_thresholds
                .iter()
                .map(|t| vec![t.name.clone(), fmt_sig(t.threshold), t.source.clone(), t.privileged_count.to_string()])
                .collect();
            md_table(&mut out, &["attribute", "threshold", "source", "privileged rows"], &rows);
        }

        if !self.comparison.is_empty() {
            out.push_str("## Algorithm comparison (no domain knowledge, test split)\n\n");
            for spec in self.comparison.iter().map(|r| &r.spec) {
                let _ = writeln!(out, "- `{}`", serde_json::to_string(spec).unwrap_or_default());
            }
            out.push('\n');
            let mut h = vec!["family"];
            h.extend(SCORE_HEADER);
            md_table(&mut out, &h, &comparison_rows(&self.comparison));
        }

        if !self.ablation.rows.is_empty() {
            out.push_str("## Domain-knowledge ablation (test split)\n\n");
            let mut h = vec!["subset", "features"];
            h.extend(SCORE_HEADER);
            h.push("converged");
            md_table(&mut out, &h, &ablation_rows(&self.ablation));
            for w in &self.ablation.warnings {
                let _ = writeln!(out, "- warning: {w}");
            }
            if !self.ablation.warnings.is_empty() {
                out.push('\n');
            }
        }

        if !self.grid.runs.is_empty() {
            out.push_str("## Mitigation grid\n\n");
            for w in &self.grid.warnings {
                let _ = writeln!(out, "- warning: {w}\n");
            }
            for run in &self.grid.runs {
                let mode = match run.mitigation {
                    Mitigation::Off => "baseline (unit weights)",
                    Mitigation::On => "reweighted",
                };
                let _ = writeln!(out, "### Subset `{}`, {mode}\n", subset_label(&run.subset));
                for cell in &run.cells {
                    cell_markdown(&mut out, cell);
                }
            }
            let deltas = delta_rows(self);
            if !deltas.is_empty() {
                out.push_str("## Before and after reweighing\n\n");
                md_table(&mut out, &["subset", "attribute", "surface", "metric", "before", "after", "delta"], &deltas);
            }
        }
        out
    }

    fn tables(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let run = vec![
            vec!["seed".into(), self.config.seed.to_string()],
            vec!["split_seed".into(), self.split_seed.to_string()],
            vec!["fingerprint".into(), self.provenance.fingerprint.clone()],
            vec!["rows".into(), self.provenance.rows.to_string()],
            vec!["train_rows".into(), self.provenance.train_rows.to_string()],
            vec!["test_rows".into(), self.provenance.test_rows.to_string()],
            vec!["target_threshold".into(), self.target_threshold.map(fmt_sig).unwrap_or_default()],
        ];
        out.push(("run".into(), csv_table(&["key", "value"], &run)));
        let thresholds: Vec<Vec<String>> = self
            .protected_thresholds
            .iter()
            .map(|t| vec![t.name.clone(), fmt_sig(t.threshold), t.source.clone(), t.privileged_count.to_string()])
            .collect();
        out.push((
            "thresholds".into(),
            csv_table(&["attribute", "threshold", "source", "privileged_rows"], &thresholds),
        ));
        if !self.comparison.is_empty() {
            let mut h = vec!["family"];
            h.extend(SCORE_HEADER);
            out.push(("comparison".into(), csv_table(&h, &comparison_rows(&self.comparison))));
        }
        if !self.ablation.rows.is_empty() {
            let mut h = vec!["subset", "features"];
            h.extend(SCORE_HEADER);
            h.push("converged");
            out.push(("ablation".into(), csv_table(&h, &ablation_rows(&self.ablation))));
        }
        if !self.grid.runs.is_empty() {
            out.push((
                "grid".into(),
                csv_table(
                    &[
                        "subset",
                        "mitigation",
                        "attribute",
                        "surface",
                        "metric",
                        "value",
                        "fair_range",
                        "verdict",
                        "weighted",
                    ],
                    &grid_rows(self),
                ),
            ));
            out.push((
                "deltas".into(),
                csv_table(&["subset", "attribute", "surface", "metric", "before", "after", "delta"], &delta_rows(self)),
            ));
            let notes: Vec<Vec<String>> = self
                .grid
                .runs
                .iter()
                .flat_map(|r| {
                    r.cells.iter().flat_map(move |c| {
                        c.notes.iter().map(move |n| {
                            vec![
                                subset_label(&r.subset),
                                r.mitigation.as_str().to_string(),
                                c.attribute.clone(),
                                n.clone(),
                            ]
                        })
                    })
                })
                .collect();
            out.push(("notes".into(), csv_table(&["subset", "mitigation", "attribute", "note"], &notes)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use riskfair_core::fairness::MetricName;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(0.056633012265132426), "0.056633");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-0.4), "-0.4");
        assert_eq!(fmt_sig(59.3), "59.3");
        assert_eq!(fmt_sig(123456.7), "123457");
        assert_eq!(fmt_sig(1234567.0), "1.23457e6");
        assert_eq!(fmt_sig(0.000001234567), "1.23457e-6");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        assert_eq!(fmt_sig(-1e-300 * 0.0), "0");
        assert_eq!(fmt_sig(9.9999999), "10");
    }

    #[test]
    fn undefined_metric_renders_reason() {
        let m = MetricOutcome::Undefined { name: MetricName::DisparateImpact, reason: "both rates are zero".into() };
        assert_eq!(fmt_outcome(&m).0, "undefined (both rates are zero)");
    }

    #[test]
    fn csv_quotes_when_needed() {
        let t = csv_table(&["a", "b"], &[vec!["x,y".into(), "z".into()]]);
        assert_eq!(t, "a,b\n\"x,y\",z\n");
    }
}
