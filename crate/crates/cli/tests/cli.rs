mod support;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn patway(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patway"))
        .args(args)
        .current_dir(dir)
        .env_remove("PATWAY_LOG_LEVEL")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = patway(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "expected one stderr line, got {stderr:?}");
    serde_json::from_str(lines[0]).unwrap()
}

fn all_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

const TINY_NET: &str = r#"{"hidden_seq": 4, "hidden_static": 4, "learning_rate": 0.01, "batch_size": 16, "max_epochs": 2}"#;

fn pipeline(dir: &Path) {
    ok(dir, &["simulate", "--n", "40", "--seed", "5", "--out", "sim.csv"]);
    ok(dir, &["ingest", "--log", "sim.csv", "--schema", "sim.csv.schema.toml", "--out", "sim.ds.json"]);
    ok(dir, &["train", "--dataset", "sim.ds.json", "--model", "patwaynet", "--hp", TINY_NET, "--seed", "2", "--out", "net.ckpt.json"]);
    ok(dir, &["interpret", "--ckpt", "net.ckpt.json", "--dataset", "sim.ds.json", "--pathway", "sim-03", "--grid", "10", "--surface-grid", "5", "--out", "sim-03.bundle.json"]);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        ok(d, &["simulate", "--n", "25", "--seed", "9", "--out", "sim.csv"]);
    }
    let fa = all_files(a.path());
    assert_eq!(fa.keys().collect::<Vec<_>>(), ["sim.csv", "sim.csv.manifest.json", "sim.csv.schema.toml"]);
    assert_eq!(fa, all_files(b.path()));
    ok(a.path(), &["simulate", "--n", "25", "--seed", "10", "--out", "sim.csv"]);
    assert_ne!(fs::read(a.path().join("sim.csv")).unwrap(), fs::read(b.path().join("sim.csv")).unwrap());
}

#[test]
fn pipeline_artifacts_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let fa = all_files(a.path());
    assert_eq!(fa.len(), 9, "{:?}", fa.keys());
    assert_eq!(fa, all_files(b.path()));

    let manifest: Value = serde_json::from_slice(&fa["sim-03.bundle.json.manifest.json"]).unwrap();
    assert_eq!(manifest["command"], "interpret");
    let bundle_id = manifest["artifacts"][0]["id"].as_str().unwrap();
    assert!(bundle_id.starts_with("sha256:"));
    let bundle: Value = serde_json::from_slice(&fa["sim-03.bundle.json"]).unwrap();
    let ckpt_manifest: Value = serde_json::from_slice(&fa["net.ckpt.json.manifest.json"]).unwrap();
    let ckpt_id = ckpt_manifest["artifacts"][0]["id"].as_str().unwrap();
    assert_eq!(format!("sha256:{}", bundle["model_hash"].as_str().unwrap()), ckpt_id);
}

#[test]
fn failures_print_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);

    let out = patway(d, &["interpret", "--ckpt", "net.ckpt.json", "--dataset", "sim.ds.json", "--pathway", "nobody", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
    let line = error_line(&out);
    assert_eq!(line["error"], "unknown_pathway");
    assert!(line["message"].as_str().unwrap().contains("nobody"));

    let out = patway(d, &["train", "--dataset", "missing.json", "--model", "tree", "--out", "t.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "io");

    let out = patway(d, &["train", "--dataset", "sim.ds.json", "--model", "forest", "--out", "t.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");

    let out = patway(d, &["train", "--dataset", "sim.ds.json", "--model", "patwaynet", "--hp", r#"{"hidden_seq": 4}"#, "--out", "t.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "evaluation");
    assert!(!d.join("t.json").exists());
}

#[test]
fn schema_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d);
    let (log, schema) = support::write_ward(d, 30);
    let (log, schema) = (log.to_str().unwrap(), schema.to_str().unwrap());
    ok(d, &["ingest", "--log", log, "--schema", schema, "--out", "ward.ds.json"]);
    let out = patway(d, &["interpret", "--ckpt", "net.ckpt.json", "--dataset", "ward.ds.json", "--pathway", "w001", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "schema_mismatch");
}

#[test]
fn evaluate_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (log, schema) = support::write_ward(d, 80);
    let (log, schema) = (log.to_str().unwrap(), schema.to_str().unwrap());
    let summary: Value = serde_json::from_str(&ok(d, &["ingest", "--log", log, "--schema", schema, "--out", "ward.ds.json"])).unwrap();
    assert_eq!(summary["task"], "classification");
    assert_eq!(summary["pathways"], 80);
    fs::write(d.join("grid.json"), r#"{"tree": {"max_depth": [2, 3]}, "logreg": {"c": [1.0]}}"#).unwrap();
    let stdout = ok(d, &["evaluate", "--dataset", "ward.ds.json", "--grid", "grid.json", "--folds", "3", "--seeds", "2", "--out", "cv.json"]);
    let table = fs::read_to_string(d.join("cv.json.md")).unwrap();
    assert_eq!(stdout, table);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "| Model | F1 weighted (val) | F1 weighted (test) | AUC_ROC (val) | AUC_ROC (test) |");
    assert!(lines.iter().any(|l| l.starts_with("| tree |")), "{table}");
    assert!(lines.iter().any(|l| l.starts_with("| logreg |")), "{table}");
    let report: Value = serde_json::from_slice(&fs::read(d.join("cv.json")).unwrap()).unwrap();
    assert_eq!(report["models"][0]["cells"].as_array().unwrap().len(), 6);
    assert!(d.join("cv.json.manifest.json").exists());
}

#[test]
fn detect_interactions_ranks_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (log, schema) = support::write_ward(d, 60);
    let (log, schema) = (log.to_str().unwrap(), schema.to_str().unwrap());
    ok(d, &["ingest", "--log", log, "--schema", schema, "--out", "ward.ds.json"]);
    let out: Value = serde_json::from_str(&ok(d, &["detect-interactions", "--dataset", "ward.ds.json", "--k", "1", "--out", "pairs.json"])).unwrap();
    assert_eq!(out["winners"][0]["features"], serde_json::json!(["CRP", "Antibiotics"]));
    let search: Value = serde_json::from_slice(&fs::read(d.join("pairs.json")).unwrap()).unwrap();
    assert_eq!(search["evaluated"].as_array().unwrap().len(), 1);
}
