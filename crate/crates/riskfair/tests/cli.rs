mod common;

use std::path::Path;

use common::{path_str, run, write_county_tables};
use riskfair::artifact::{read_manifest, sha256_hex};
use riskfair::AppError;

fn manifest_verifies(dir: &Path) {
    let m = read_manifest(dir).unwrap();
    assert!(!m.files.is_empty());
    for f in &m.files {
        let bytes = std::fs::read(dir.join(&f.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256, "{}", f.path);
        assert_eq!(bytes.len() as u64, f.bytes);
    }
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut m = read_manifest(dir).unwrap().files;
    m.sort_by(|a, b| a.path.cmp(&b.path));
    let mut out: Vec<_> = m.iter().map(|f| (f.path.clone(), std::fs::read(dir.join(&f.path)).unwrap())).collect();
    out.push(("manifest.json".into(), std::fs::read(dir.join("manifest.json")).unwrap()));
    out
}

#[test]
fn no_arguments_prints_usage_and_exits_one() {
    let (code, _, err) = run::<&str>(&[]);
    assert_eq!(code, 1);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn unknown_subcommand_exits_one() {
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 1);
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("grid"));
}

#[test]
fn missing_input_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(&dir.path().join("out"));
    let (code, _, err) = run(&["ingest", "--county", "/nonexistent/county.csv", "--out", &out]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn grid_without_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(&dir.path().join("out"));
    let (code, _, _) = run(&["grid", "--out", &out]);
    assert_eq!(code, 1);
}

#[test]
fn numeric_failures_map_to_exit_three() {
    let e = AppError::Core(riskfair_core::Error::NumericFailure { iteration: 3, detail: "non-finite gradient".into() });
    assert_eq!(e.exit_code(), 3);
    assert_eq!(AppError::Core(riskfair_core::Error::Config("x".into())).exit_code(), 2);
    assert_eq!(AppError::Usage("x".into()).exit_code(), 1);
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let (code, _, err) = run(&["synth", "--n", "300", "--delta", "0.2", "--seed", "9", "--out", &path_str(d)]);
        assert_eq!(code, 0, "{err}");
        manifest_verifies(d);
    }
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn grid_on_synthetic_data_is_reproducible_and_hashed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let (code, _, err) = run(&["synth", "--n", "400", "--delta", "0.2", "--seed", "3", "--out", &path_str(&data)]);
    assert_eq!(code, 0, "{err}");
    let tab = path_str(&data.join("synthetic.csv"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let (code, _, err) =
            run(&["grid", "--tabular", &tab, "--seed", "3", "--format", "struct", "--out", &path_str(d)]);
        assert_eq!(code, 0, "{err}");
        manifest_verifies(d);
    }
    assert_eq!(tree(&a), tree(&b));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    assert!(!report["grid"]["runs"].as_array().unwrap().is_empty());
}

#[test]
fn county_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (county, dk) = write_county_tables(dir.path(), 240, 17);
    let (county, dk) = (path_str(&county), path_str(&dk));

    let ing = dir.path().join("ingest");
    let (code, _, err) = run(&["ingest", "--county", &county, "--dk", &dk, "--out", &path_str(&ing)]);
    assert_eq!(code, 0, "{err}");
    manifest_verifies(&ing);
    let clean = std::fs::read_to_string(ing.join("clean.csv")).unwrap();
    assert_eq!(clean.lines().count(), 241);

    let grid = dir.path().join("grid");
    let (code, _, err) = run(&[
        "grid",
        "--county",
        &county,
        "--dk",
        &dk,
        "--seed",
        "5",
        "--format",
        "struct",
        "--out",
        &path_str(&grid),
    ]);
    assert_eq!(code, 0, "{err}");
    manifest_verifies(&grid);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(grid.join("report.json")).unwrap()).unwrap();
    // empty, three singletons and all three, each without and with reweighing
    assert_eq!(report["grid"]["runs"].as_array().unwrap().len(), 10);

    let train = dir.path().join("train");
    let (code, _, err) = run(&[
        "train",
        "--county",
        &county,
        "--dk",
        &dk,
        "--family",
        "logistic",
        "--subset",
        "pct_nh_white",
        "--out",
        &path_str(&train),
    ]);
    assert_eq!(code, 0, "{err}");
    let model = path_str(&train.join("model.json"));

    let audit = dir.path().join("audit");
    let (code, _, err) = run(&[
        "audit",
        "--county",
        &county,
        "--dk",
        &dk,
        "--model",
        &model,
        "--format",
        "struct",
        "--out",
        &path_str(&audit),
    ]);
    assert_eq!(code, 0, "{err}");
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(audit.join("audit.json")).unwrap()).unwrap();
    assert_eq!(summary["cells"].as_array().unwrap().len(), 3);

    let explore = dir.path().join("explore");
    let (code, _, err) = run(&["explore", "--county", &county, "--dk", &dk, "--out", &path_str(&explore)]);
    assert_eq!(code, 0, "{err}");
    assert!(explore.join("density/pct_nh_white_smoothed.svg").exists());

    let mitigate = dir.path().join("mitigate");
    let (code, _, err) = run(&[
        "mitigate",
        "--county",
        &county,
        "--dk",
        &dk,
        "--subset",
        "pct_age_65_plus",
        "--out",
        &path_str(&mitigate),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(mitigate.join("mitigate.md").exists());
}

#[test]
fn model_from_other_data_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    run(&["synth", "--n", "200", "--out", &path_str(&data)]);
    let tab = path_str(&data.join("synthetic.csv"));
    let train = dir.path().join("train");
    let (code, _, err) = run(&["train", "--tabular", &tab, "--out", &path_str(&train)]);
    assert_eq!(code, 0, "{err}");
    let (county, dk) = write_county_tables(dir.path(), 60, 1);
    let (code, _, _) = run(&[
        "audit",
        "--county",
        &path_str(&county),
        "--dk",
        &path_str(&dk),
        "--model",
        &path_str(&train.join("model.json")),
        "--out",
        &path_str(&dir.path().join("audit")),
    ]);
    assert_eq!(code, 2);
}
