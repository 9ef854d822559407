use std::fs;
use std::path::Path;
use std::process::Command;

use multispike::cli::{main_with_args, RunConfig};
use serde_json::Value;

fn run(args: &[&str], out: &Path) -> i32 {
    let mut v = vec!["multispike"];
    v.extend_from_slice(args);
    v.push("--out");
    v.push(out.to_str().unwrap());
    main_with_args(v)
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn constants_report_carries_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["constants"], dir.path()), 0);
    let rep = read_json(&dir.path().join("constants.json"));
    let cfg: RunConfig = serde_json::from_value(read_json(&dir.path().join("config.json"))).unwrap();
    assert_eq!(rep["config_hash"].as_str().unwrap(), cfg.hash());
    assert!(rep["rel_error"]["sn_pow"].as_f64().unwrap() < 1e-12);
    assert_eq!(rep["gamma2_over_gamma3"].as_f64().unwrap(), 2.0);
    let meta = read_json(&dir.path().join("metadata.json"));
    assert_eq!(meta["command"], "constants");
    assert_eq!(meta["exit_code"], 0);
}

#[test]
fn landscape_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["landscape", "--override", "landscape.samples=11"], dir.path()), 0);
    let text = fs::read_to_string(dir.path().join("landscape.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config_hash="));
    assert_eq!(lines[1], "t,ftilde,rho");
    assert_eq!(lines.len(), 13);
    // the middle sample is the center, where F = 1/2
    let mid: Vec<f64> = lines[7].split(',').map(|c| c.parse().unwrap()).collect();
    assert!(mid[0].abs() < 1e-15);
    assert!((mid[1] - 0.5).abs() < 1e-12);
}

#[test]
fn landscape_rejects_three_spikes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["landscape", "--override", "gamma=[1,1,1]"], dir.path()), 2);
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["constants", "--override", "nn=4"], dir.path()), 2);
    assert_eq!(run(&["constants", "--override", "n=2"], dir.path()), 2);
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"eps": 1e-3, "extra": true}"#).unwrap();
    assert_eq!(run(&["constants", "--config", cfg.to_str().unwrap()], dir.path()), 2);
}

#[test]
fn config_file_then_override_then_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"eps": 1e-3, "search": {"grid": 21}}"#).unwrap();
    let code = run(
        &["critical", "--config", cfg.to_str().unwrap(), "--override", "search.grid=15", "--seed", "42"],
        dir.path(),
    );
    assert_eq!(code, 0);
    let used = read_json(&dir.path().join("config.json"));
    assert_eq!(used["eps"], 1e-3);
    assert_eq!(used["search"]["grid"], 15);
    assert_eq!(used["search"]["seed"], 42);
    let rep = read_json(&dir.path().join("critical.json"));
    assert_eq!(rep["certified"], 1);
}

#[test]
fn verify_exit_code_follows_study_status() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "--override", "studies=[]"], &dir.path().join("empty")), 0);
    let rep = read_json(&dir.path().join("empty/verify.json"));
    assert_eq!(rep["studies"].as_array().unwrap().len(), 0);

    let one = r#"studies=[{"study":"loglog"}]"#;
    assert_eq!(run(&["verify", "--override", one], &dir.path().join("pass")), 0);
    // an impossible tolerance turns the same study into a failure
    let strict = r#"studies=[{"study":"loglog","thresholds":{"extrapolation_tol":1e-30}}]"#;
    assert_eq!(run(&["verify", "--override", strict], &dir.path().join("fail")), 1);
    let rep = read_json(&dir.path().join("fail/verify.json"));
    assert_eq!(rep["failed"][0], "loglog");
    let md = fs::read_to_string(dir.path().join("fail/summary.md")).unwrap();
    assert!(md.contains("| loglog | fail |"));
}

#[test]
fn build_writes_field_and_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["build", "--override", "build.grid_per_side=9", "--override", "eps=1e-3"], dir.path()), 0);
    let rep = read_json(&dir.path().join("build.json"));
    assert!(rep["refine"]["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(rep["field_range"]["samples"].as_u64().unwrap() as usize, csv_rows(&dir.path().join("field.csv")));
    let ratio = rep["concentration"]["rows"][0]["spikes"][0]["ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
}

fn csv_rows(p: &Path) -> usize {
    fs::read_to_string(p).unwrap().lines().filter(|l| !l.starts_with('#')).count() - 1
}

#[test]
fn binary_prints_help_and_rejects_unknown_commands() {
    let bin = env!("CARGO_BIN_EXE_multispike");
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert!(help.status.success());
    let text = String::from_utf8_lossy(&help.stdout);
    for c in ["constants", "landscape", "critical", "build", "verify"] {
        assert!(text.contains(c), "{c} missing from help");
    }
    let bad = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
