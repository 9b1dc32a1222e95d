//! Subcommand definitions and their implementations.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use patway_core::checkpoint::{Checkpoint, ModelKind};
use patway_core::evalharness::{default_hyperparameters, evaluate_all, fit_model, EvalConfig, GridFile, GridSpec};
use patway_core::eventlog::{ingest, read_snapshot, split_by_pathway, write_snapshot, EncodedDataset, PathwayFilter, SchemaSidecar};
use patway_core::interactions::{detect_interactions, SearchConfig};
use patway_core::interpret::{export_bundle, BundleConfig};
use patway_core::seed;
use patway_core::simgen::{self, SimConfig};

use crate::error::CliError;
use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "patway", version, about = "Interpretable patient-pathway outcome prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, filter, encode and prefix an event log into a dataset file.
    Ingest(IngestArgs),
    /// Generate the synthetic log with known effects (CSV plus schema sidecar).
    Simulate(SimulateArgs),
    /// Rank pairs of sequential features by boosted-tree proxy AUC.
    DetectInteractions(DetectArgs),
    /// Fit one model and write a checkpoint.
    Train(TrainArgs),
    /// Repeated stratified cross-validation with grid search.
    Evaluate(EvaluateArgs),
    /// Export the interpretation bundle of one pathway.
    Interpret(InterpretArgs),
    /// Serve predictions and interpretations over HTTP (read-only).
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Event log CSV (one row per event).
    #[arg(long)]
    pub log: PathBuf,
    /// Schema sidecar (.toml or .json).
    #[arg(long)]
    pub schema: PathBuf,
    /// Output dataset (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Drop pathways with at most 2 or more than 50 events and those not
    /// starting with "ER Registration".
    #[arg(long)]
    pub filter_outliers: bool,
    /// Keep pathways strictly longer than this (enables filtering).
    #[arg(long)]
    pub min_len: Option<usize>,
    /// Keep pathways at most this long (enables filtering).
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Required first activity (enables filtering).
    #[arg(long)]
    pub start_activity: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative heart-rate / blood-pressure step per measurement.
    #[arg(long, default_value_t = 0.3)]
    pub hr_change: f64,
    /// Output CSV; the schema sidecar goes to `<out>.schema.toml`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Number of winning pairs.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Maximum number of pairs scored.
    #[arg(long, default_value_t = 100)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Search result JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: ModelKind,
    /// Hyperparameters as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub hp: Option<String>,
    /// Interaction corridors, e.g. `CRP:LacticAcid,Leucocytes:CRP`.
    #[arg(long)]
    pub interactions: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Validation dataset for early stopping; otherwise a pathway-atomic
    /// split of `--dataset` is held out.
    #[arg(long)]
    pub val_dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Grid file: `{"<model>": {"<param>": [values...]}}`. Defaults to the
    /// built-in grids of `--models`.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Comma-separated model kinds used with the built-in grids.
    #[arg(long, default_value = "patwaynet,lstm,logreg,tree,knn,nb")]
    pub models: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    /// Base seed the per-run seeds are derived from.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    /// Fraction of each training fold used (learning curves).
    #[arg(long, default_value_t = 1.0)]
    pub train_fraction: f64,
    /// Report JSON; the markdown table goes to `<out>.md`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InterpretArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub pathway: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Prefix length to explain (default: the whole pathway).
    #[arg(long)]
    pub prefix_len: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[arg(long, default_value_t = 50)]
    pub surface_grid: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, env = "PATWAY_ADDR", default_value = "127.0.0.1:8080")]
    pub addr: String,
}

pub fn read_dataset(path: &Path) -> Result<EncodedDataset, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(read_snapshot(BufReader::new(file))?)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn print_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("stdout", e)),
        _ => Ok(()),
    }
}

fn print_json(value: &Value) -> Result<(), CliError> {
    print_stdout(&(serde_json::to_string_pretty(value)? + "\n"))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::DetectInteractions(a) => cmd_detect(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Interpret(a) => cmd_interpret(&a),
        Command::Serve(a) => crate::server::run_server(&a),
    }
}

fn cmd_ingest(a: &IngestArgs) -> Result<(), CliError> {
    let sidecar = SchemaSidecar::load(&a.schema)?;
    let filter = (a.filter_outliers || a.min_len.is_some() || a.max_len.is_some() || a.start_activity.is_some()).then(|| {
        let d = PathwayFilter::default();
        PathwayFilter {
            min_len_exclusive: a.min_len.unwrap_or(d.min_len_exclusive),
            max_len_inclusive: a.max_len.unwrap_or(d.max_len_inclusive),
            required_start: a.start_activity.clone().or(d.required_start),
        }
    });
    let file = File::open(&a.log).map_err(|e| CliError::io(&a.log, e))?;
    let ds = ingest(BufReader::new(file), &sidecar, filter.as_ref())?;
    let mut out = create(&a.out)?;
    write_snapshot(&ds, &mut out)?;
    drop(out);
    let config = json!({
        "filter": filter.map(|f| json!({
            "min_len_exclusive": f.min_len_exclusive,
            "max_len_inclusive": f.max_len_inclusive,
            "required_start": f.required_start,
        })),
    });
    RunManifest::new("ingest", config, vec![])
        .input(&a.log, "event_log")?
        .input(&a.schema, "schema")?
        .artifact(&a.out, "dataset")?
        .write_next_to(&a.out)?;
    print_json(&json!({
        "dataset": a.out,
        "pathways": ds.pathways.len(),
        "rows": ds.n_rows(),
        "static_features": ds.n_static(),
        "sequential_features": ds.n_seq(),
        "task": ds.task,
        "schema_hash": ds.schema_hash(),
    }))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let cfg = SimConfig {
        n_pathways: a.n,
        seed: a.seed,
        hr_change: a.hr_change,
    };
    let sim = simgen::generate(&cfg)?;
    let mut out = create(&a.out)?;
    simgen::write_csv(&sim, &mut out)?;
    out.flush().map_err(|e| CliError::io(&a.out, e))?;
    drop(out);
    let schema_path = with_suffix(&a.out, ".schema.toml");
    write_text(&schema_path, &simgen::schema_sidecar().to_toml())?;
    RunManifest::new("simulate", json!({"n": a.n, "hr_change": a.hr_change}), vec![a.seed])
        .artifact(&a.out, "event_log")?
        .artifact(&schema_path, "schema")?
        .write_next_to(&a.out)?;
    print_json(&json!({"log": a.out, "schema": schema_path, "pathways": sim.log.len()}))
}

fn cmd_detect(a: &DetectArgs) -> Result<(), CliError> {
    let ds = read_dataset(&a.dataset)?;
    let cfg = SearchConfig {
        k: a.k,
        budget: a.budget,
        seed: a.seed,
        ..SearchConfig::default()
    };
    let search = detect_interactions(&ds, &cfg)?;
    let value = serde_json::to_value(&search)?;
    match &a.out {
        Some(out) => {
            write_text(out, &(serde_json::to_string_pretty(&value)? + "\n"))?;
            RunManifest::new("detect-interactions", json!({"k": a.k, "budget": a.budget}), vec![a.seed])
                .input(&a.dataset, "dataset")?
                .artifact(out, "interaction_search")?
                .write_next_to(out)?;
            let winners: Vec<_> = search.winners.iter().map(|w| json!({"features": w.features, "auc": w.auc})).collect();
            print_json(&json!({ "winners": winners }))
        }
        None => print_json(&value),
    }
}

/// Parses `a:b,c:d` into name pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| match pair.split_once(':') {
            Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => Ok((a.trim().to_string(), b.trim().to_string())),
            _ => Err(CliError::Usage(format!("interaction '{pair}' is not of the form a:b"))),
        })
        .collect()
}

fn load_hyperparameters(a: &TrainArgs) -> Result<Value, CliError> {
    let mut hp = match &a.hp {
        None => default_hyperparameters(a.model),
        Some(text) if text.trim_start().starts_with('{') => serde_json::from_str(text)?,
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text)?
        }
    };
    if let Some(pairs) = &a.interactions {
        let obj = hp
            .as_object_mut()
            .ok_or_else(|| CliError::Usage("hyperparameters must be a JSON object".into()))?;
        obj.insert("interactions".into(), serde_json::to_value(parse_pairs(pairs)?)?);
    }
    Ok(hp)
}

fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let ds = read_dataset(&a.dataset)?;
    let hp = load_hyperparameters(a)?;
    let (train_ds, val_ds) = match &a.val_dataset {
        Some(path) => (ds.clone(), read_dataset(path)?),
        None if a.model.is_network() => split_by_pathway(&ds, a.val_fraction, seed::derive(a.seed, &[0x7a1]))?,
        None => (ds.clone(), ds.clone()),
    };
    let fitted = fit_model(a.model, &hp, &train_ds, &val_ds, a.seed)?;
    let ckpt = Checkpoint::new(&fitted.model, &ds, hp.clone(), a.seed, fitted.training.clone());
    ckpt.save(&a.out)?;
    let mut manifest = RunManifest::new("train", json!({"model": a.model, "hyperparameters": hp, "val_fraction": a.val_fraction}), vec![a.seed])
        .input(&a.dataset, "dataset")?;
    if let Some(path) = &a.val_dataset {
        manifest = manifest.input(path, "validation_dataset")?;
    }
    manifest.artifact(&a.out, "checkpoint")?.write_next_to(&a.out)?;
    print_json(&json!({
        "checkpoint": a.out,
        "model_kind": a.model,
        "model_hash": ckpt.model_hash()?,
        "training": fitted.training.map(|t| json!({
            "metric": t.metric,
            "best_epoch": t.best_epoch,
            "best_metric": t.best_metric,
            "epochs": t.history.len(),
            "stopped_early": t.stopped_early,
        })),
    }))
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let ds = read_dataset(&a.dataset)?;
    let grids: GridFile = match &a.grid {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text)?
        }
        None => a
            .models
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                let kind: ModelKind = s.trim().parse().map_err(CliError::Usage)?;
                Ok((kind, GridSpec::default_for(kind)))
            })
            .collect::<Result<_, CliError>>()?,
    };
    let cfg = EvalConfig {
        folds: a.folds,
        seeds: a.seeds,
        base_seed: a.seed,
        val_fraction: a.val_fraction,
        train_fraction: a.train_fraction,
    };
    let report = evaluate_all(&ds, &grids, &cfg)?;
    write_text(&a.out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    let md_path = with_suffix(&a.out, ".md");
    let markdown = report.to_markdown();
    write_text(&md_path, &markdown)?;
    let mut manifest = RunManifest::new("evaluate", json!({"grids": grids, "eval": cfg}), vec![a.seed]).input(&a.dataset, "dataset")?;
    if let Some(path) = &a.grid {
        manifest = manifest.input(path, "grid")?;
    }
    manifest
        .artifact(&a.out, "cv_report")?
        .artifact(&md_path, "cv_table")?
        .write_next_to(&a.out)?;
    print_stdout(&markdown)
}

fn cmd_interpret(a: &InterpretArgs) -> Result<(), CliError> {
    let ckpt = Checkpoint::load(&a.ckpt)?;
    let ds = read_dataset(&a.dataset)?;
    ckpt.check_dataset(&ds)?;
    let model = ckpt.model()?;
    let net = model.network().ok_or(patway_core::interpret::InterpretError::NotInterpretable)?;
    let cfg = BundleConfig {
        top_k: a.top_k,
        grid: a.grid,
        surface_grid: a.surface_grid,
        prefix_len: a.prefix_len,
        ..BundleConfig::default()
    };
    let bundle = export_bundle(net, &ds, &a.pathway, &cfg, &ckpt.model_hash()?)?;
    write_text(&a.out, &(serde_json::to_string_pretty(&bundle)? + "\n"))?;
    RunManifest::new("interpret", json!({"pathway": a.pathway, "bundle": cfg}), vec![ckpt.seed])
        .input(&a.ckpt, "checkpoint")?
        .input(&a.dataset, "dataset")?
        .artifact(&a.out, "interpretation_bundle")?
        .write_next_to(&a.out)?;
    print_json(&json!({"bundle": a.out, "prediction": bundle.prediction}))
}
