use std::path::PathBuf;
use std::process::{Command, Output};

use lrcluster::model::LindbladModel;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lrcluster"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn lrcluster")
}

fn tiny_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/smoke.json")
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_regime_is_a_usage_error() {
    let out = run(&["bounds", "eval", "--regime", "nope", "--alpha", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn regime_outside_validity_exits_two() {
    let out = run(&["bounds", "eval", "--regime", "power_law", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn bounds_eval_prints_fingerprint_and_header() {
    let out = run(&["bounds", "eval", "--regime", "hk", "--alpha", "3", "--r-grid", "1,2", "--t-grid", "0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# lrcluster"));
    assert_eq!(lines.next().unwrap(), "r,t,value,regime");
    assert_eq!(lines.count(), 2);
}

#[test]
fn model_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let out = run(&[
        "model", "export", "--family", "xy-damped", "--n", "3", "--alpha", "2.5", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let model = LindbladModel::from_json(&text).unwrap();
    assert_eq!(model.num_sites(), 3);
    assert_eq!(model.to_json().unwrap() + "\n", text);
}

#[test]
fn spectrum_writes_sigma_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("sigma.bin");
    let out = run(&["spectrum", "--n", "2", "--sigma-dump", dump.to_str().unwrap()]);
    assert!(out.status.success());
    let (sigma, _) = lrcluster::io::read_operator_dump(std::fs::File::open(&dump).unwrap()).unwrap();
    assert_eq!(sigma.nrows(), 4);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("re,im"));
}

#[test]
fn verify_all_on_tiny_config_passes_and_is_deterministic() {
    let cfg = tiny_config();
    let args = ["--json", "verify", "all", "--config", cfg.to_str().unwrap()];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
}
