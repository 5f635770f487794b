use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fingerprint"))
}

fn crate_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn generate_from(dir: &Path, config: &Path) -> PathBuf {
    let b = dir.join("bench");
    let out = run(&["generate", "--config", config.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(out.status.success());
    b
}

fn generate(dir: &Path) -> PathBuf {
    generate_from(dir, &crate_path("configs/minimal.json"))
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn generate_writes_models_and_manifest_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let b = generate(dir.path());
    let models = fs::read_dir(b.join("models")).unwrap().count();
    assert_eq!(models, 4);
    let first = fs::read(b.join("manifest.json")).unwrap();
    let weights = fs::read(b.join("models/v0.bin")).unwrap();
    let again = run(&[
        "generate",
        "--config",
        crate_path("configs/minimal.json").to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(again.status.success());
    assert_eq!(fs::read(b.join("manifest.json")).unwrap(), first);
    assert_eq!(fs::read(b.join("models/v0.bin")).unwrap(), weights);
}

#[test]
fn invalid_config_reports_its_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"seed\": 1,\n  \"victims\": \"two\"\n}").unwrap();
    let out = run(&["generate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("b").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn evaluate_writes_reports_with_one_row_per_task() {
    let dir = tempfile::tempdir().unwrap();
    let b = generate(dir.path());
    let out_dir = dir.path().join("eval");
    let out = run(&[
        "evaluate", "--benchmark", b.to_str().unwrap(), "--scheme", "akh", "--budget", "10", "--runs", "5",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary = csv_rows(&out_dir.join("summary.csv"));
    let tasks: Vec<&str> = summary.iter().map(|r| &r[2]).collect();
    assert_eq!(tasks, ["same", "aggregate_pooled", "aggregate_task_mean"]);
    assert!(summary.iter().all(|r| r[4].parse::<f64>().is_ok() && &r[5] == "5"));
    assert_eq!(csv_rows(&out_dir.join("runs.csv")).len(), 5);
    assert_eq!(csv_rows(&out_dir.join("pairs.csv")).len(), 5 * 3);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["run_config"]["command"], "evaluate");
    assert_eq!(report["run_config"]["seed"], 0);
    assert_eq!(report["run_seeds"], serde_json::json!([0, 1, 2, 3, 4]));
    assert!(report["version"].is_string());
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let b = generate(dir.path());
    let scheme = crate_path("configs/schemes/adversarial_pairwise.json");
    let mut pairs = Vec::new();
    for workers in ["1", "3"] {
        let out_dir = dir.path().join(format!("w{workers}"));
        let out = run(&[
            "--workers", workers, "evaluate", "--benchmark", b.to_str().unwrap(), "--scheme", scheme.to_str().unwrap(),
            "--budget", "10", "--runs", "2", "--out", out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        pairs.push(fs::read(out_dir.join("pairs.csv")).unwrap());
    }
    assert_eq!(pairs[0], pairs[1]);
}

#[test]
fn incompatible_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let b = generate(dir.path());
    let bad = crate_path("tests/fixtures/uniform_pairwise_invalid.json");
    let out_dir = dir.path().join("eval");
    let out = run(&[
        "evaluate", "--benchmark", b.to_str().unwrap(), "--scheme", bad.to_str().unwrap(), "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible-scheme"));

    fs::write(b.join("manifest.json"), "{ truncated").unwrap();
    let out = run(&["evaluate", "--benchmark", b.to_str().unwrap(), "--scheme", "akh", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_streams_one_grid_row_per_method_budget_and_run() {
    let dir = tempfile::tempdir().unwrap();
    // Enough victim mistakes for 100 negative queries.
    let cfg = dir.path().join("noisy.json");
    let minimal = fs::read_to_string(crate_path("configs/minimal.json")).unwrap();
    fs::write(&cfg, minimal.replace("\"n_test\": 400, \"spread\": 5.0", "\"n_test\": 1500, \"spread\": 8.0")).unwrap();
    let b = generate_from(dir.path(), &cfg);
    let out_dir = dir.path().join("sweep");
    let neg = crate_path("configs/schemes/negative_labels.json");
    let out = run(&[
        "sweep", "--benchmark", b.to_str().unwrap(), "--scheme", "akh", "--scheme", neg.to_str().unwrap(),
        "--budgets", "10,25,50,100", "--runs", "2", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let grid = csv_rows(&out_dir.join("grid.csv"));
    assert_eq!(grid.len(), 8 * 2);
    for run in ["0", "1"] {
        assert_eq!(grid.iter().filter(|r| &r[2] == run).count(), 8);
    }
    let sweep: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sweep["cells"].as_array().unwrap().len(), 8);
}

#[test]
fn sweep_without_schemes_is_a_usage_error() {
    let out = run(&["sweep", "--benchmark", "x", "--out", "y"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn distances_lists_every_pair() {
    let dir = tempfile::tempdir().unwrap();
    let b = generate(dir.path());
    let out_dir = dir.path().join("dist");
    let out = run(&["distances", "--benchmark", b.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&out_dir.join("distances.csv")).len(), 3);
}

#[test]
fn shipped_configs_parse() {
    let desk = fs::read_to_string(crate_path("configs/desk.json")).unwrap();
    let cfg = fingerprint_core::harness::BenchmarkConfig::from_json(&desk).unwrap();
    assert_eq!(cfg, fingerprint_core::harness::BenchmarkConfig::desk());
    for entry in fs::read_dir(crate_path("configs/schemes")).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        fingerprint_core::qurd::SchemeSpec::from_json(&text).unwrap();
    }
}
