//! `riskfair` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/schema/configuration/IO
//! error, 3 numeric failure.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use riskfair_core::experiment::{
    self, prepare, run_experiment, ExperimentConfig, ExperimentData, MitigationMode, Stages, Surface, SurfaceMetrics,
    Target,
};
use riskfair_core::explore::{correlation_matrix, density_1d, density_2d, GROUP_LABELS};
use riskfair_core::fairness::{GroupDefinition, MetricName};
use riskfair_core::models::{self, classification_scores, ClassifierSpec};
use riskfair_core::synth::{expected_label_metrics, generate_biased, SynthSpec, GROUP_COLUMN};

use crate::artifact::{fingerprint, OutputDir};
use crate::config::{classifier_from_table, parse_family, RunConfig};
use crate::error::{AppError, AppResult};
use crate::ingest::{self, merge_domain_knowledge, parse_county_table, serialize_records};
use crate::modelio::ModelFile;
use crate::plots;
use crate::report::{emit, Format};
use crate::schema::TableSchema;
use crate::summary::{
    AuditCell, AuditSummary, DensityEntry, ExploreSummary, IngestSummary, SynthSummary, TrainSummary,
};
use crate::tabular::{read_tabular, write_tabular};

pub const DEFAULT_OUT: &str = "riskfair-out";

#[derive(Debug, Parser)]
#[command(
    name = "riskfair",
    version,
    about = "Fairness-aware county risk classification: ingest, explore, train, audit and mitigate",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Run configuration file (TOML with sections); flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Top-level seed; split, forest and SVM seeds derive from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// County health table (CSV with header).
    #[arg(long, value_name = "FILE")]
    pub county: Option<PathBuf>,
    /// Domain-knowledge table joined on FIPS.
    #[arg(long, value_name = "FILE")]
    pub dk: Option<PathBuf>,
    /// Column schema (defaults to the bundled county_v1 schema).
    #[arg(long, value_name = "FILE")]
    pub schema: Option<PathBuf>,
    /// Dataset in the `synth` output layout, instead of county tables.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["county", "dk"])]
    pub tabular: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, join and drop incomplete rows; writes the clean table.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Correlation matrix and density grids with SVG charts.
    Explore {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Fit one model on the training split and score it on the test split.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Classifier family (overrides the config's [classifier] family).
        #[arg(long)]
        family: Option<String>,
        /// Comma-separated domain-knowledge columns added as features.
        #[arg(long, value_delimiter = ',')]
        subset: Vec<String>,
    },
    /// Fairness metrics for a saved model (or a freshly trained one).
    Audit {
        #[command(flatten)]
        data: DataArgs,
        /// Model file written by `train`.
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Comma-separated protected attributes (default: all).
        #[arg(long, value_delimiter = ',')]
        attribute: Vec<String>,
        /// Domain-knowledge columns as features when training here.
        #[arg(long, value_delimiter = ',')]
        subset: Vec<String>,
    },
    /// Reweigh, retrain and report before/after metrics.
    Mitigate {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated protected attributes to audit (default: the
        /// subset's own, or all for an empty subset).
        #[arg(long, value_delimiter = ',')]
        attribute: Vec<String>,
        /// Comma-separated domain-knowledge columns added as features.
        #[arg(long, value_delimiter = ',')]
        subset: Vec<String>,
    },
    /// Full experiment: algorithm comparison, ablation and mitigation grid.
    Grid {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Synthetic data with a controlled group/label dependence.
    Synth {
        /// Number of rows.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Bias strength in [0, 0.5): P(y=1 | g=1) = 0.5 + delta, P(y=1 | g=0) = 0.5 - delta.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Features that depend on the class.
        #[arg(long, default_value_t = 2)]
        d_informative: usize,
        /// Pure-noise features.
        #[arg(long, default_value_t = 2)]
        d_noise: usize,
        /// Magnitude of the class-conditional feature means.
        #[arg(long, default_value_t = 1.0)]
        separation: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Explore { .. } => "explore",
            Command::Train { .. } => "train",
            Command::Audit { .. } => "audit",
            Command::Mitigate { .. } => "mitigate",
            Command::Grid { .. } => "grid",
            Command::Synth { .. } => "synth",
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
            };
        }
    };
    match run(cli) {
        Ok(msg) => {
            let _ = writeln!(stdout, "{msg}");
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

struct Context {
    rc: RunConfig,
    seed: u64,
    out: PathBuf,
    format: Format,
}

fn context(cli: &Cli) -> AppResult<Context> {
    let mut rc = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        rc.seed = Some(s);
    }
    let seed = rc.seed();
    let out = cli.out.clone().or_else(|| rc.output.dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let format = cli.format.or(rc.output.format).unwrap_or(Format::Md);
    Ok(Context { rc, seed, out, format })
}

fn read(path: &Path) -> AppResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| AppError::io(path, e))
}

fn utf8(path: &Path, bytes: Vec<u8>) -> AppResult<String> {
    String::from_utf8(bytes).map_err(|_| AppError::Schema(format!("{} is not UTF-8", path.display())))
}

struct Loaded {
    data: ExperimentData,
    fingerprint: String,
    ingest: Option<IngestSummary>,
    clean_csv: Option<String>,
}

fn load(args: &DataArgs, rc: &RunConfig) -> AppResult<Loaded> {
    let county = args.county.clone().or_else(|| rc.input.county.clone());
    let dk = args.dk.clone().or_else(|| rc.input.dk.clone());
    let tabular = args.tabular.clone().or_else(|| rc.input.tabular.clone());
    let schema_path = args.schema.clone().or_else(|| rc.input.schema.clone());

    if args.county.is_none() && args.dk.is_none() {
        if let Some(path) = &tabular {
            let bytes = read(path)?;
            let fp = fingerprint([("tabular", bytes.as_slice())]);
            let ds = read_tabular(&utf8(path, bytes)?)?;
            return Ok(Loaded {
                data: ExperimentData::from_tabular(&ds),
                fingerprint: fp,
                ingest: None,
                clean_csv: None,
            });
        }
    }
    let county = county.ok_or_else(|| AppError::Usage("no input: pass --county (and --dk) or --tabular".into()))?;
    let (schema, schema_text) = match &schema_path {
        Some(p) => {
            let text = utf8(p, read(p)?)?;
            (TableSchema::from_toml(&text)?, text)
        }
        None => (TableSchema::builtin(), crate::schema::COUNTY_V1.to_string()),
    };
    let county_bytes = read(&county)?;
    let dk_bytes = match &dk {
        Some(p) => Some(read(p)?),
        None => None,
    };
    let mut parts: Vec<(&str, &[u8])> = vec![("schema", schema_text.as_bytes()), ("county", &county_bytes)];
    if let Some(b) = &dk_bytes {
        parts.push(("dk", b));
    }
    let fp = fingerprint(parts);

    let records = parse_county_table(&utf8(&county, county_bytes.clone())?, &schema)?;
    let parsed = records.len();
    let (records, matched, unmatched) = match (&dk, dk_bytes) {
        (Some(p), Some(b)) => {
            let m = merge_domain_knowledge(records, &utf8(p, b)?, &schema)?;
            (m.records, Some(m.matched), Some(m.unmatched))
        }
        _ => (records, None, None),
    };
    let required: BTreeSet<String> = ingest::modelling_fields(&schema);
    let (records, dropped) = ingest::drop_incomplete(records, &required, &schema)?;
    let summary = IngestSummary {
        schema: schema.name.clone(),
        fingerprint: fp.clone(),
        parsed,
        matched,
        unmatched,
        dropped,
        kept: records.len(),
    };
    Ok(Loaded {
        data: ingest::to_experiment_data(&records, &schema)?,
        fingerprint: fp,
        ingest: Some(summary),
        clean_csv: Some(serialize_records(&records, &schema)?),
    })
}

fn run(cli: Cli) -> AppResult<String> {
    let ctx = context(&cli)?;
    let command = cli.command.name();
    let mut out = OutputDir::create(&ctx.out)?;
    match &cli.command {
        Command::Ingest { data } => cmd_ingest(&ctx, data, &mut out)?,
        Command::Explore { data } => cmd_explore(&ctx, data, &mut out)?,
        Command::Train { data, family, subset } => cmd_train(&ctx, data, family.as_deref(), subset, &mut out)?,
        Command::Audit { data, model, attribute, subset } => {
            cmd_audit(&ctx, data, model.as_deref(), attribute, subset, &mut out)?
        }
        Command::Mitigate { data, attribute, subset } => cmd_mitigate(&ctx, data, attribute, subset, &mut out)?,
        Command::Grid { data } => cmd_grid(&ctx, data, &mut out)?,
        Command::Synth { n, delta, d_informative, d_noise, separation } => {
            let spec = SynthSpec {
                n: *n,
                delta: *delta,
                d_informative: *d_informative,
                d_noise: *d_noise,
                separation: *separation,
                seed: ctx.seed,
            };
            cmd_synth(&ctx, spec, &mut out)?
        }
    }
    let count = out.paths().count();
    let manifest = out.finish(command, ctx.seed)?;
    debug_assert_eq!(manifest.files.len(), count);
    Ok(format!("{command}: wrote {count} artifact(s) and {} to {}", crate::artifact::MANIFEST, ctx.out.display()))
}

fn cmd_ingest(ctx: &Context, data: &DataArgs, out: &mut OutputDir) -> AppResult<()> {
    if data.tabular.is_some() {
        return Err(AppError::Usage("ingest reads county tables (--county/--dk), not --tabular".into()));
    }
    let loaded = load(data, &ctx.rc)?;
    out.write("clean.csv", loaded.clean_csv.expect("county input").as_bytes())?;
    emit(out, "ingest", ctx.format, &loaded.ingest.expect("county input"))?;
    Ok(())
}

fn cmd_explore(ctx: &Context, args: &DataArgs, out: &mut OutputDir) -> AppResult<()> {
    let loaded = load(args, &ctx.rc)?;
    let data = &loaded.data;
    let opts = ctx.rc.density()?;
    let cfg = ctx.rc.experiment(&data.dk_names())?;
    let prepared = prepare(data, &cfg)?;

    let mut names = data.base_names.clone();
    let mut columns: Vec<Vec<f64>> = (0..data.base.cols()).map(|j| data.base.column(j)).collect();
    for c in &data.dk {
        names.push(c.name.clone());
        columns.push(c.values.clone());
    }
    let target_values = match &data.target {
        Target::Percent(v) => {
            names.push(ingest::TARGET_FIELD.to_string());
            v.clone()
        }
        Target::Binary(v) => {
            names.push("label".into());
            v.iter().map(|&b| f64::from(b)).collect()
        }
    };
    columns.push(target_values.clone());
    let correlation = correlation_matrix(&names, &columns)?;

    // smoothed, histogram and heat-map views per domain-knowledge column by
    // risk level; synthetic data has 0/1 protected columns, so its features
    // are shown instead
    let views: Vec<(String, Vec<f64>)> = match &data.target {
        Target::Percent(_) => data.dk.iter().map(|c| (c.name.clone(), c.values.clone())).collect(),
        Target::Binary(_) => data.base_names.iter().cloned().zip(columns.iter().cloned()).collect(),
    };
    let target_name = names.last().cloned().unwrap_or_default();
    let mut densities = Vec::new();
    for (name, values) in &views {
        let d1 = density_1d(values, &prepared.labels, opts.bins, opts.grid_points)?;
        let d2 = density_2d(values, &target_values, opts.grid_2d)?;
        let stem = format!("density/{name}");
        let title = format!("Risk level by {name}");
        out.write(&format!("{stem}_smoothed.csv"), plots::smoothed_csv(&d1).as_bytes())?;
        out.write(&format!("{stem}_smoothed.svg"), plots::smoothed_svg(&d1, &title, name).as_bytes())?;
        out.write(&format!("{stem}_histogram.csv"), plots::histogram_csv(&d1).as_bytes())?;
        out.write(&format!("{stem}_histogram.svg"), plots::histogram_svg(&d1, &title, name).as_bytes())?;
        out.write(&format!("{stem}_heatmap.csv"), plots::grid2d_csv(&d2).as_bytes())?;
        out.write(
            &format!("{stem}_heatmap.svg"),
            plots::heatmap_svg(&d2, &format!("{name} against {target_name}"), name, &target_name).as_bytes(),
        )?;
        densities.push(DensityEntry {
            column: name.clone(),
            groups: d1.groups.iter().map(|g| (g.label.clone(), g.size, g.bandwidth, g.note.clone())).collect(),
        });
    }
    let summary = ExploreSummary {
        fingerprint: loaded.fingerprint,
        rows: data.len(),
        target_threshold: prepared.target_threshold,
        group_labels: GROUP_LABELS.map(String::from).to_vec(),
        correlation,
        densities,
    };
    emit(out, "explore", ctx.format, &summary)?;
    Ok(())
}

fn grid_classifier(ctx: &Context, cfg: &ExperimentConfig, family: Option<&str>) -> AppResult<ClassifierSpec> {
    match family {
        None => Ok(cfg.classifier),
        Some(f) => {
            parse_family(f)?;
            let mut table = ctx.rc.classifier.clone().unwrap_or_default();
            let same = table.get("family").and_then(|v| v.as_str()) == Some(f);
            if !same {
                table = toml::Table::new();
            }
            table.insert("family".into(), toml::Value::String(f.to_string()));
            classifier_from_table(&table, cfg.classifier, cfg.seed)
        }
    }
}

fn cmd_train(
    ctx: &Context,
    args: &DataArgs,
    family: Option<&str>,
    subset: &[String],
    out: &mut OutputDir,
) -> AppResult<()> {
    let loaded = load(args, &ctx.rc)?;
    let data = &loaded.data;
    let cfg = ctx.rc.experiment(&data.dk_names())?;
    let spec = grid_classifier(ctx, &cfg, family)?;
    let prepared = prepare(data, &cfg)?;
    let (names, x) = data.features(subset)?;
    let (train, test) = (&prepared.split.train, &prepared.split.test);
    let y_train: Vec<u8> = train.iter().map(|&i| prepared.labels[i]).collect();
    let y_test: Vec<u8> = test.iter().map(|&i| prepared.labels[i]).collect();
    let model = models::fit(&spec, &names, &x.select_rows(train), &y_train, &vec![1.0; train.len()], cfg.standardize)?;
    let y_hat = model.predict(&x.select_rows(test))?;
    let converged = match &model.params {
        models::ModelParams::Logistic(m) => Some(m.converged),
        _ => None,
    };
    let file = ModelFile::new(model, ctx.seed);
    out.write("model.json", file.to_json()?.as_bytes())?;
    let summary = TrainSummary {
        seed: ctx.seed,
        split_seed: prepared.split_seed,
        fingerprint: loaded.fingerprint,
        spec,
        features: names,
        train_rows: train.len(),
        test_rows: test.len(),
        target_threshold: prepared.target_threshold,
        converged,
        scores: classification_scores(&y_test, &y_hat)?,
        model_file: "model.json".into(),
    };
    emit(out, "train", ctx.format, &summary)?;
    Ok(())
}

fn cmd_audit(
    ctx: &Context,
    args: &DataArgs,
    model_path: Option<&Path>,
    attributes: &[String],
    subset: &[String],
    out: &mut OutputDir,
) -> AppResult<()> {
    let loaded = load(args, &ctx.rc)?;
    let data = &loaded.data;
    let cfg = ctx.rc.experiment(&data.dk_names())?;
    let prepared = prepare(data, &cfg)?;
    let (train, test) = (&prepared.split.train, &prepared.split.test);
    let y_train: Vec<u8> = train.iter().map(|&i| prepared.labels[i]).collect();

    let model = match model_path {
        Some(p) => ModelFile::load(p)?.model,
        None => {
            let (names, x) = data.features(subset)?;
            models::fit(
                &cfg.classifier,
                &names,
                &x.select_rows(train),
                &y_train,
                &vec![1.0; train.len()],
                cfg.standardize,
            )?
        }
    };
    // rebuild the model's feature layout from the data
    let base = &data.base_names;
    if model.feature_names.len() < base.len() || &model.feature_names[..base.len()] != base.as_slice() {
        return Err(AppError::Schema("model features do not start with this dataset's base features".into()));
    }
    let extra = model.feature_names[base.len()..].to_vec();
    let (_, x) = data.features(&extra)?;
    let attributes = if attributes.is_empty() { data.dk_names() } else { attributes.to_vec() };
    let mut cells = Vec::new();
    let predict = |idx: &[usize]| model.predict(&x.select_rows(idx));
    let yhat_test = predict(test)?;
    let yhat_train = predict(train)?;
    let y_test: Vec<u8> = test.iter().map(|&i| prepared.labels[i]).collect();
    for a in &attributes {
        let p = prepared.protected(a)?;
        let gd: GroupDefinition = cfg.group(a);
        let mut surfaces = Vec::new();
        for &surface in cfg.surface.surfaces() {
            let (idx, y, yh) = match surface {
                Surface::Test => (test, &y_test, &yhat_test),
                Surface::Train => (train, &y_train, &yhat_train),
            };
            let g: Vec<u8> = idx.iter().map(|&i| p.values[i]).collect();
            surfaces.push(SurfaceMetrics { surface, metrics: experiment::audit(y, yh, &g, &gd, surface, None) });
        }
        cells.push(AuditCell { attribute: a.clone(), group: gd, threshold: p.threshold, surfaces });
    }
    let summary = AuditSummary {
        seed: ctx.seed,
        split_seed: prepared.split_seed,
        fingerprint: loaded.fingerprint,
        spec: model.spec,
        features: model.feature_names.clone(),
        test_scores: classification_scores(&y_test, &yhat_test)?,
        cells,
    };
    emit(out, "audit", ctx.format, &summary)?;
    Ok(())
}

fn cmd_mitigate(
    ctx: &Context,
    args: &DataArgs,
    attributes: &[String],
    subset: &[String],
    out: &mut OutputDir,
) -> AppResult<()> {
    let loaded = load(args, &ctx.rc)?;
    let data = &loaded.data;
    let mut cfg = ctx.rc.experiment(&data.dk_names())?;
    cfg.dk_subsets = vec![subset.to_vec()];
    cfg.mitigation = MitigationMode::Both;
    if !attributes.is_empty() {
        cfg.audited = Some(attributes.to_vec());
    }
    let report =
        run_experiment(data, &cfg, &loaded.fingerprint, Stages { comparison: false, ablation: false, grid: true })?;
    emit(out, "mitigate", ctx.format, &report)?;
    Ok(())
}

fn cmd_grid(ctx: &Context, args: &DataArgs, out: &mut OutputDir) -> AppResult<()> {
    let loaded = load(args, &ctx.rc)?;
    let cfg = ctx.rc.experiment(&loaded.data.dk_names())?;
    let report = run_experiment(&loaded.data, &cfg, &loaded.fingerprint, Stages::ALL)?;
    emit(out, "report", ctx.format, &report)?;
    Ok(())
}

fn cmd_synth(ctx: &Context, spec: SynthSpec, out: &mut OutputDir) -> AppResult<()> {
    let ds = generate_biased(&spec)?;
    out.write("synthetic.csv", write_tabular(&ds).as_bytes())?;
    let gd = GroupDefinition::new(GROUP_COLUMN);
    let (spd, di) = expected_label_metrics(&spec, &gd)?;
    let g = ds.protected(GROUP_COLUMN).expect("generator adds the group column");
    let label_spd = riskfair_core::fairness::statistical_parity_difference(ds.y(), g, &gd, None);
    let label_di = riskfair_core::fairness::disparate_impact(ds.y(), g, &gd, None);
    let outcome = |name, r| experiment::MetricOutcome::from_result(name, r);
    let summary = SynthSummary {
        spec,
        group: gd,
        expected_spd: spd,
        expected_di: di,
        empirical: vec![
            outcome(MetricName::StatisticalParityDifference, label_spd),
            outcome(MetricName::DisparateImpact, label_di),
        ],
        data_file: "synthetic.csv".into(),
    };
    emit(out, "synth", ctx.format, &summary)?;
    Ok(())
}
