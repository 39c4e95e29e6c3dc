mod common;

use std::collections::BTreeSet;

use common::{county_tables, Mix};
use proptest::prelude::*;
use riskfair::ingest::{
    drop_incomplete, merge_domain_knowledge, modelling_fields, parse_county_table, serialize_records,
};
use riskfair::schema::TableSchema;

/// Blanks each numeric cell of the body with probability `p`.
fn blank_cells(table: &str, p: f64, seed: u64) -> String {
    let mut rng = Mix::new(seed);
    let mut lines = table.lines();
    let mut out = lines.next().unwrap().to_string() + "\n";
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let row: Vec<&str> =
            cells.iter().enumerate().map(|(j, c)| if j >= 3 && rng.unit() < p { "" } else { *c }).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Keeps each body row with probability `p`.
fn sample_rows(table: &str, p: f64, seed: u64) -> String {
    let mut rng = Mix::new(seed);
    let mut lines = table.lines();
    let mut out = lines.next().unwrap().to_string() + "\n";
    for line in lines.filter(|_| rng.unit() < p) {
        out.push_str(line);
        out.push('\n');
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn drop_incomplete_is_idempotent(n in 1usize..40, seed in any::<u64>(), p in 0.0f64..0.1) {
        let schema = TableSchema::builtin();
        let (county, dk) = county_tables(n, seed);
        let county = blank_cells(&county, p, seed ^ 1);
        let records = parse_county_table(&county, &schema).unwrap();
        let merged = merge_domain_knowledge(records, &dk, &schema).unwrap().records;
        let required = modelling_fields(&schema);
        let (once, dropped) = drop_incomplete(merged.clone(), &required, &schema).unwrap();
        prop_assert_eq!(once.len() + dropped, merged.len());
        let (twice, again) = drop_incomplete(once.clone(), &required, &schema).unwrap();
        prop_assert_eq!(again, 0);
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn merge_preserves_base_rows(n in 1usize..40, seed in any::<u64>(), keep in 0.0f64..1.0) {
        let schema = TableSchema::builtin();
        let (county, dk) = county_tables(n, seed);
        let dk = sample_rows(&dk, keep, seed ^ 2);
        let base = parse_county_table(&county, &schema).unwrap();
        let fips: Vec<String> = base.iter().map(|r| r.fips.clone()).collect();
        let m = merge_domain_knowledge(base, &dk, &schema).unwrap();
        prop_assert_eq!(m.records.len(), n);
        prop_assert_eq!(m.matched + m.unmatched, n);
        prop_assert_eq!(m.matched, dk.lines().count() - 1);
        let after: Vec<String> = m.records.iter().map(|r| r.fips.clone()).collect();
        prop_assert_eq!(after, fips);
    }

    #[test]
    fn serialize_then_parse_is_identity(n in 0usize..30, seed in any::<u64>(), p in 0.0f64..0.2) {
        let schema = TableSchema::builtin();
        let (county, dk) = county_tables(n, seed);
        let county = blank_cells(&county, p, seed ^ 3);
        let records = parse_county_table(&county, &schema).unwrap();
        let records = merge_domain_knowledge(records, &dk, &schema).unwrap().records;
        let text = serialize_records(&records, &schema).unwrap();
        let back = parse_county_table(&text, &schema).unwrap();
        prop_assert_eq!(&back, &records);
        prop_assert_eq!(serialize_records(&back, &schema).unwrap(), text);
    }

    #[test]
    fn dropping_fewer_fields_keeps_more_rows(n in 1usize..40, seed in any::<u64>(), p in 0.0f64..0.2) {
        let schema = TableSchema::builtin();
        let (county, _) = county_tables(n, seed);
        let records = parse_county_table(&blank_cells(&county, p, seed), &schema).unwrap();
        let all = modelling_fields(&schema);
        let target: BTreeSet<String> = [riskfair::ingest::TARGET_FIELD.to_string()].into();
        let (strict, _) = drop_incomplete(records.clone(), &all, &schema).unwrap();
        let (loose, _) = drop_incomplete(records, &target, &schema).unwrap();
        prop_assert!(strict.len() <= loose.len());
    }
}
