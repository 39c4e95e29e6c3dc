//! County and domain-knowledge table parsing, the FIPS join and
//! incomplete-row removal.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use riskfair_core::experiment::{ExperimentData, NamedColumn, Target};
use riskfair_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::schema::{ColumnSpec, Role, TableSchema, UnitClass};

pub const TARGET_FIELD: &str = "alcohol_impaired_death_pct";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountyRecord {
    pub fips: String,
    pub state: String,
    pub county: String,
    /// Keyed by schema field, in schema order.
    pub explanatory: IndexMap<String, Option<f64>>,
    pub alcohol_impaired_death_pct: Option<f64>,
    pub per_capita_income: Option<f64>,
    pub pct_age_65_plus: Option<f64>,
    pub pct_nh_white: Option<f64>,
}

impl CountyRecord {
    fn empty(fips: String, schema: &TableSchema) -> Self {
        CountyRecord {
            fips,
            state: String::new(),
            county: String::new(),
            explanatory: schema.explanatory_fields().into_iter().map(|f| (f, None)).collect(),
            alcohol_impaired_death_pct: None,
            per_capita_income: None,
            pct_age_65_plus: None,
            pct_nh_white: None,
        }
    }

    /// Numeric value of a schema field; `None` when missing or unknown.
    pub fn field(&self, name: &str) -> Option<f64> {
        match name {
            TARGET_FIELD => self.alcohol_impaired_death_pct,
            "per_capita_income" => self.per_capita_income,
            "pct_age_65_plus" => self.pct_age_65_plus,
            "pct_nh_white" => self.pct_nh_white,
            other => self.explanatory.get(other).copied().flatten(),
        }
    }

    fn slot(&mut self, spec: &ColumnSpec) -> &mut Option<f64> {
        match (spec.role, spec.field.as_str()) {
            (Role::Target, _) => &mut self.alcohol_impaired_death_pct,
            (_, "per_capita_income") => &mut self.per_capita_income,
            (_, "pct_age_65_plus") => &mut self.pct_age_65_plus,
            (_, "pct_nh_white") => &mut self.pct_nh_white,
            (_, other) => self.explanatory.entry(other.to_string()).or_insert(None),
        }
    }

    fn dk_slots(&mut self) -> [&mut Option<f64>; 3] {
        [&mut self.per_capita_income, &mut self.pct_age_65_plus, &mut self.pct_nh_white]
    }
}

/// Left-pads numeric codes to five digits.
pub fn normalize_fips(raw: &str) -> Option<String> {
    let t = raw.trim();
    if t.is_empty() || t.len() > 5 || !t.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(format!("{t:0>5}"))
}

fn check_unit(spec: &ColumnSpec, v: f64) -> Result<(), String> {
    if !v.is_finite() {
        return Err(format!("non-finite value {v}"));
    }
    match spec.unit {
        Some(UnitClass::Percent) if !(0.0..=100.0).contains(&v) => Err(format!("percentage {v} outside [0, 100]")),
        Some(UnitClass::Usd | UnitClass::Count) if v < 0.0 => Err(format!("negative amount {v}")),
        _ => Ok(()),
    }
}

/// Percent columns whose present values all fall in [0, 1] were almost
/// certainly exported as fractions; they are rejected rather than rescaled.
fn reject_fraction_percent(spec: &ColumnSpec, values: &[f64]) -> AppResult<()> {
    if spec.unit != Some(UnitClass::Percent) || values.len() < 3 {
        return Ok(());
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 1.0 && values.iter().any(|&v| v > 0.0) {
        return Err(AppError::Schema(format!(
            "percent column `{}` has every value in [0, 1]; supply percentages, not fractions",
            spec.header
        )));
    }
    Ok(())
}

struct ParsedTable<'s> {
    columns: Vec<Option<&'s ColumnSpec>>,
    records: Vec<CountyRecord>,
}

fn parse_table<'s>(raw: &str, schema: &'s TableSchema) -> AppResult<ParsedTable<'s>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::None).from_reader(raw.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let columns = schema.resolve(&headers)?;
    let key_col = columns
        .iter()
        .position(|c| c.is_some_and(|c| c.role == Role::Key))
        .ok_or_else(|| AppError::Schema(format!("key column `{}` not found in header", schema.key().header)))?;

    let mut records = Vec::new();
    let mut seen = BTreeMap::new();
    let mut by_column: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let raw_key = row.get(key_col).unwrap_or("");
        let fips = normalize_fips(raw_key).ok_or_else(|| AppError::Parse {
            row: row_no,
            column: headers[key_col].clone(),
            detail: format!("`{raw_key}` is not a county FIPS code"),
        })?;
        if let Some(first) = seen.insert(fips.clone(), row_no) {
            return Err(AppError::DuplicateKey { key: fips, row: row_no.max(first) });
        }
        let mut rec = CountyRecord::empty(fips, schema);
        for (j, spec) in columns.iter().enumerate() {
            let Some(spec) = spec else { continue };
            let token = row.get(j).unwrap_or("");
            match spec.role {
                Role::Key | Role::Ignored => {}
                Role::State => rec.state = token.trim().to_string(),
                Role::County => rec.county = token.trim().to_string(),
                _ => {
                    let value = if schema.is_missing(token) {
                        None
                    } else {
                        let v: f64 = token.trim().parse().map_err(|_| AppError::Parse {
                            row: row_no,
                            column: headers[j].clone(),
                            detail: format!("`{}` is not a number", token.trim()),
                        })?;
                        check_unit(spec, v).map_err(|detail| AppError::Parse {
                            row: row_no,
                            column: headers[j].clone(),
                            detail,
                        })?;
                        by_column.entry(j).or_default().push(v);
                        Some(v)
                    };
                    *rec.slot(spec) = value;
                }
            }
        }
        records.push(rec);
    }
    for (j, values) in &by_column {
        if let Some(spec) = columns[*j] {
            reject_fraction_percent(spec, values)?;
        }
    }
    Ok(ParsedTable { columns, records })
}

/// One record per data row, in file order. The key, target and every
/// explanatory column must be present in the header.
pub fn parse_county_table(raw: &str, schema: &TableSchema) -> AppResult<Vec<CountyRecord>> {
    let table = parse_table(raw, schema)?;
    let present: BTreeSet<&str> = table.columns.iter().flatten().map(|c| c.field.as_str()).collect();
    for c in schema.columns.iter().filter(|c| matches!(c.role, Role::Target | Role::Explanatory)) {
        if !present.contains(c.field.as_str()) {
            return Err(AppError::Schema(format!("required column `{}` missing from county table", c.header)));
        }
    }
    Ok(table.records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub records: Vec<CountyRecord>,
    pub matched: usize,
    pub unmatched: usize,
}

/// Fills the domain-knowledge fields of `base` from `dk_table` by FIPS.
/// Unmatched records keep their existing values. Order and count of `base`
/// are preserved.
pub fn merge_domain_knowledge(
    base: Vec<CountyRecord>,
    dk_table: &str,
    schema: &TableSchema,
) -> AppResult<MergeOutcome> {
    let dk = if dk_table.trim().is_empty() { Vec::new() } else { parse_table(dk_table, schema)?.records };
    let index: BTreeMap<&str, &CountyRecord> = dk.iter().map(|r| (r.fips.as_str(), r)).collect();
    let mut matched = 0;
    let records: Vec<CountyRecord> = base
        .into_iter()
        .map(|mut rec| {
            if let Some(src) = index.get(rec.fips.as_str()) {
                matched += 1;
                let values = [src.per_capita_income, src.pct_age_65_plus, src.pct_nh_white];
                for (slot, v) in rec.dk_slots().into_iter().zip(values) {
                    if v.is_some() {
                        *slot = v;
                    }
                }
                if rec.state.is_empty() {
                    rec.state = src.state.clone();
                }
                if rec.county.is_empty() {
                    rec.county = src.county.clone();
                }
            }
            rec
        })
        .collect();
    let unmatched = records.len() - matched;
    Ok(MergeOutcome { records, matched, unmatched })
}

/// Keeps records whose `required` fields are all present; returns them with
/// the number dropped.
pub fn drop_incomplete(
    records: Vec<CountyRecord>,
    required: &BTreeSet<String>,
    schema: &TableSchema,
) -> AppResult<(Vec<CountyRecord>, usize)> {
    let known = schema.known_fields();
    if let Some(bad) = required.iter().find(|f| !known.contains(*f)) {
        return Err(AppError::Config(format!("unknown field `{bad}` in required set")));
    }
    let before = records.len();
    let kept: Vec<CountyRecord> =
        records.into_iter().filter(|r| required.iter().all(|f| r.field(f).is_some())).collect();
    let dropped = before - kept.len();
    Ok((kept, dropped))
}

/// Key, target, explanatory and domain-knowledge fields.
pub fn modelling_fields(schema: &TableSchema) -> BTreeSet<String> {
    schema.known_fields()
}

/// CSV with the schema's canonical headers; missing values are empty cells.
pub fn serialize_records(records: &[CountyRecord], schema: &TableSchema) -> AppResult<String> {
    let cols: Vec<&ColumnSpec> = schema.columns.iter().filter(|c| c.role != Role::Ignored).collect();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(cols.iter().map(|c| c.header.as_str()))?;
    for r in records {
        let row: Vec<String> = cols
            .iter()
            .map(|c| match c.role {
                Role::Key => r.fips.clone(),
                Role::State => r.state.clone(),
                Role::County => r.county.clone(),
                _ => r.field(&c.field).map(|v| format!("{v}")).unwrap_or_default(),
            })
            .collect();
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| AppError::io("<buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Complete records as model input: explanatory columns as base features,
/// the target percentage, and the domain-knowledge columns.
pub fn to_experiment_data(records: &[CountyRecord], schema: &TableSchema) -> AppResult<ExperimentData> {
    let base_names = schema.explanatory_fields();
    let dk_names = schema.dk_fields();
    let need = |r: &CountyRecord, f: &str| {
        r.field(f).ok_or_else(|| {
            AppError::Config(format!("record {} is missing `{f}`; drop incomplete rows before modelling", r.fips))
        })
    };
    let mut rows = Vec::with_capacity(records.len());
    let mut target = Vec::with_capacity(records.len());
    let mut dk = vec![Vec::with_capacity(records.len()); dk_names.len()];
    for r in records {
        rows.push(base_names.iter().map(|f| need(r, f)).collect::<AppResult<Vec<f64>>>()?);
        target.push(need(r, TARGET_FIELD)?);
        for (col, f) in dk.iter_mut().zip(&dk_names) {
            col.push(need(r, f)?);
        }
    }
    let base = if rows.is_empty() { Matrix::zeros(0, base_names.len()) } else { Matrix::from_rows(&rows)? };
    Ok(ExperimentData {
        ids: records.iter().map(|r| r.fips.clone()).collect(),
        base_names,
        base,
        target: Target::Percent(target),
        dk: dk_names
            .into_iter()
            .zip(dk)
            .map(|(name, values)| NamedColumn { name, values, default_threshold: None })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(schema: &TableSchema, with_dk: bool) -> String {
        schema
            .columns
            .iter()
            .filter(|c| c.role != Role::DomainKnowledge || with_dk)
            .map(|c| c.header.clone())
            .collect::<Vec<_>>()
            .join(",")
    }

    fn row(schema: &TableSchema, fips: &str, target: &str, with_dk: bool) -> String {
        schema
            .columns
            .iter()
            .filter(|c| c.role != Role::DomainKnowledge || with_dk)
            .map(|c| match c.role {
                Role::Key => fips.to_string(),
                Role::State => "Alabama".into(),
                Role::County => format!("County {fips}"),
                Role::Target => target.to_string(),
                Role::DomainKnowledge => "40".into(),
                _ => match c.unit {
                    Some(UnitClass::Usd) => "52000".into(),
                    Some(UnitClass::Index) => "7.5".into(),
                    _ => "12.5".into(),
                },
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    #[test]
    fn header_only_table_is_empty() {
        let s = TableSchema::builtin();
        assert!(parse_county_table(&header(&s, false), &s).unwrap().is_empty());
    }

    #[test]
    fn blank_target_cell_is_missing() {
        let s = TableSchema::builtin();
        let text = [
            header(&s, false),
            row(&s, "1001", "20.5", false),
            row(&s, "01003", "", false),
            row(&s, "1005", "31", false),
        ]
        .join("\n");
        let recs = parse_county_table(&text, &s).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].fips, "01001");
        assert_eq!(recs[0].alcohol_impaired_death_pct, Some(20.5));
        assert_eq!(recs[1].alcohol_impaired_death_pct, None);
        assert_eq!(recs[2].alcohol_impaired_death_pct, Some(31.0));
        assert_eq!(recs[1].state, "Alabama");
        assert_eq!(recs[0].explanatory.len(), 20);
        assert_eq!(recs[0].explanatory["median_household_income"], Some(52000.0));
        assert_eq!(recs[0].per_capita_income, None);
    }

    #[test]
    fn bad_token_names_row_and_column() {
        let s = TableSchema::builtin();
        let text = [header(&s, false), row(&s, "1001", "20", false), row(&s, "1003", "abc", false)].join("\n");
        match parse_county_table(&text, &s) {
            Err(AppError::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "Alcohol-Impaired Driving Deaths");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let s = TableSchema::builtin();
        let text = [header(&s, false), row(&s, "1001", "20", false), row(&s, "01001", "21", false)].join("\n");
        assert!(matches!(parse_county_table(&text, &s), Err(AppError::DuplicateKey { .. })));
    }

    #[test]
    fn fractions_and_out_of_range_percentages_are_rejected() {
        let s = TableSchema::builtin();
        let text =
            [header(&s, false), row(&s, "1", "0.2", false), row(&s, "2", "0.3", false), row(&s, "3", "0.25", false)]
                .join("\n");
        assert!(matches!(parse_county_table(&text, &s), Err(AppError::Schema(_))));
        let text = [header(&s, false), row(&s, "1", "120", false)].join("\n");
        assert!(matches!(parse_county_table(&text, &s), Err(AppError::Parse { .. })));
    }

    #[test]
    fn missing_required_column_is_a_schema_error() {
        let s = TableSchema::builtin();
        let text = "FIPS,State\n01001,Alabama\n";
        let e = parse_county_table(text, &s).unwrap_err();
        assert!(matches!(e, AppError::Schema(_)), "{e}");
    }

    fn base_two(s: &TableSchema) -> Vec<CountyRecord> {
        let text = [header(s, false), row(s, "1001", "20", false), row(s, "1003", "25", false)].join("\n");
        parse_county_table(&text, s).unwrap()
    }

    #[test]
    fn merge_counts() {
        let s = TableSchema::builtin();
        let dk_both = "FIPS,Per Capita Income,Age 65+,Non-Hispanic White\n1001,30000,18.5,70.1\n1003,25000,21,40\n";
        let m = merge_domain_knowledge(base_two(&s), dk_both, &s).unwrap();
        assert_eq!((m.records.len(), m.matched, m.unmatched), (2, 2, 0));
        assert_eq!(m.records[0].pct_nh_white, Some(70.1));

        let dk_one = "FIPS,Per Capita Income,Age 65+,Non-Hispanic White\n1003,25000,21,40\n";
        let m = merge_domain_knowledge(base_two(&s), dk_one, &s).unwrap();
        assert_eq!((m.records.len(), m.matched, m.unmatched), (2, 1, 1));
        assert_eq!(m.records[0].per_capita_income, None);
        assert_eq!(m.records[1].per_capita_income, Some(25000.0));

        let m = merge_domain_knowledge(base_two(&s), "", &s).unwrap();
        assert_eq!(m.records, base_two(&s));
        assert_eq!(m.unmatched, 2);

        let dup = "FIPS,Age 65+\n1003,21\n1003,22\n";
        assert!(matches!(merge_domain_knowledge(base_two(&s), dup, &s), Err(AppError::DuplicateKey { .. })));
    }

    #[test]
    fn drop_incomplete_fixture() {
        let s = TableSchema::builtin();
        let mut lines = vec![header(&s, true)];
        for (i, t) in ["20", "", "25", "", "30"].iter().enumerate() {
            lines.push(row(&s, &format!("{}", i + 1), t, true));
        }
        let recs = parse_county_table(&lines.join("\n"), &s).unwrap();
        let required = modelling_fields(&s);
        let (kept, dropped) = drop_incomplete(recs.clone(), &required, &s).unwrap();
        assert_eq!((kept.len(), dropped), (3, 2));
        assert_eq!(kept.iter().map(|r| r.fips.as_str()).collect::<Vec<_>>(), ["00001", "00003", "00005"]);
        let (same, d) = drop_incomplete(recs.clone(), &BTreeSet::new(), &s).unwrap();
        assert_eq!((same, d), (recs.clone(), 0));
        let bad: BTreeSet<String> = ["nope".to_string()].into();
        assert!(matches!(drop_incomplete(recs, &bad, &s), Err(AppError::Config(_))));
    }

    #[test]
    fn serialize_then_parse_round_trips() {
        let s = TableSchema::builtin();
        let mut lines = vec![header(&s, true)];
        lines.push(row(&s, "1001", "20.123456789", true));
        lines.push(row(&s, "1003", "", true));
        let recs = parse_county_table(&lines.join("\n"), &s).unwrap();
        let text = serialize_records(&recs, &s).unwrap();
        assert_eq!(parse_county_table(&text, &s).unwrap(), recs);
    }

    #[test]
    fn complete_records_become_experiment_data() {
        let s = TableSchema::builtin();
        let lines = [header(&s, true), row(&s, "1001", "20", true), row(&s, "1003", "30", true)];
        let recs = parse_county_table(&lines.join("\n"), &s).unwrap();
        let data = to_experiment_data(&recs, &s).unwrap();
        assert_eq!(data.base.cols(), 20);
        assert_eq!(data.dk.len(), 3);
        assert_eq!(data.target, Target::Percent(vec![20.0, 30.0]));
    }
}
