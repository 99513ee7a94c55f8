use std::path::Path;
use std::process::{Command, Output};

use mubtomo::io::{CountsFile, ReconstructionFile, SchemeFile};
use serde_json::Value;

fn mubtomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mubtomo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read<T: serde::de::DeserializeOwned>(p: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn bases_check_reports_tiny_mub_deviation() {
    let out = mubtomo(&["--strict", "bases", "check", "--scheme", "mub"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let dev: f64 = text
        .split("= ")
        .nth(1)
        .and_then(|s| s.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(dev < 1e-12, "{text}");
    assert!(text.contains("complete: true"));
}

#[test]
fn bases_export_writes_scheme_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ssqst.json");
    let out = mubtomo(&["bases", "export", "--scheme", "ssqst", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let f: SchemeFile = read(&path);
    assert_eq!(f.bases.len(), 9);
    assert_eq!(f.bases[0].elements[0].label, "HH");
}

#[test]
fn simulate_with_zero_copies_writes_zero_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.json");
    let out = mubtomo(&["simulate", "--state", "HV", "--scheme", "ssqst", "--n", "0", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let f: CountsFile = read(&path);
    assert_eq!(f.bases.len(), 9);
    assert!(f.bases.iter().all(|b| b.counts.iter().all(|&c| c == 0)));
}

#[test]
fn simulate_then_reconstruct_hv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("hv.json");
    let rec = dir.path().join("rec.json");
    for scheme in ["mub", "ssqst"] {
        let out = mubtomo(&[
            "simulate", "--state", "HV", "--scheme", scheme, "--visibility", "0.93", "--n", "100000", "--seed", "4",
            "--out", counts.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let out = mubtomo(&["--strict", "reconstruct", counts.to_str().unwrap(), "--out", rec.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let r: ReconstructionFile = read(&rec);
        assert!(r.converged);
        assert!(r.fidelity.unwrap() > 0.99, "{scheme}: {:?}", r.fidelity);
    }
}

#[test]
fn experiment_csv_is_reproducible_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"state": "HV", "n_total": [2000, 4000], "trials": 5, "seed": 3}"#).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = mubtomo(&[
            "--config", cfg.to_str().unwrap(), "experiment", "ratio", "--trials", "2", "--out", p.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    // 2 N values x 2 trials x 2 schemes, plus the header
    assert_eq!(text.lines().count(), 9);
    assert!(text.lines().skip(1).all(|l| l.starts_with("ratio,") && l.contains(",HV,")));

    let summary: Value = read(&a.with_extension("summary.json"));
    assert_eq!(summary["config"]["trials"], 2);
    assert_eq!(summary["ratios"].as_array().unwrap().len(), 2);
    assert!(summary["ratios"][0]["ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(mubtomo(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mubtomo(&["simulate", "--state", "nope", "--scheme", "mub", "--n", "1"]).status.code(), Some(1));
    assert_eq!(mubtomo(&["experiment", "ratio", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(mubtomo(&["experiment", "ratio", "--n", "100,0"]).status.code(), Some(1));
    assert_eq!(mubtomo(&["experiment", "ratio", "--visibility", "1.5"]).status.code(), Some(1));
    assert_eq!(mubtomo(&["reconstruct", "/nonexistent/counts.json"]).status.code(), Some(1));
    assert_eq!(mubtomo(&["--help"]).status.code(), Some(0));
}

#[test]
fn strict_non_convergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("c.json");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"mle": {"tolerance": 1e-10, "max_iterations": 2, "dilution": 0.5}}"#).unwrap();
    let out = mubtomo(&["simulate", "--state", "bell-phi-plus", "--scheme", "mub", "--n", "5000", "--out", counts.to_str().unwrap()]);
    assert!(out.status.success());
    let args = ["--config", cfg.to_str().unwrap(), "reconstruct", counts.to_str().unwrap()];
    assert_eq!(mubtomo(&args).status.code(), Some(0));
    let mut strict = vec!["--strict"];
    strict.extend_from_slice(&args);
    assert_eq!(mubtomo(&strict).status.code(), Some(2));
}
