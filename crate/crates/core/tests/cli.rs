use std::process::{Command, Output};

use divcolor::cli::read_samples_csv;
use divcolor::stats::summarize;
use serde_json::Value;

fn command(line: &str) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_divcolor"));
    cmd.args(line.split_whitespace()).env_remove("DCL_SEED");
    cmd
}

fn divcolor(line: &str) -> Output {
    command(line).output().expect("run divcolor")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn check_identity_passes() {
    let out = divcolor("check-identity --dim 2 --radius 8 --p 0.5 --graph-replicates 50");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json = report(&out);
    assert_eq!(json["tests"][0]["name"], "identity-violations");
    assert_eq!(json["tests"][0]["statistic"], 0.0);
}

#[test]
fn report_has_every_section() {
    let out = divcolor("clt --dim 2 --radius 8 --p 0.7 --graph-replicates 60 --seed 3");
    let json = report(&out);
    let keys = [
        "experiment",
        "config",
        "estimates",
        "predictions",
        "tests",
        "diagnostics",
        "seeds",
        "timing",
        "samples",
    ];
    for key in keys {
        assert!(json.get(key).is_some(), "missing `{key}`");
    }
    assert_eq!(json["config"]["master_seed"], 3);
    assert_eq!(json["seeds"]["master_seed"], 3);
}

#[test]
fn estimate_at_zero_is_exact() {
    let out = divcolor("estimate --dim 2 --radius 6 --p 0 --replicates 10");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let est = &report(&out)["estimates"];
    assert_eq!(est["theta_hat"], 0.0);
    assert_eq!(est["chi_f_hat"], 1.0);
    assert_eq!(est["kappa_hat"], 1.0);
}

#[test]
fn gamma_sample_csv_is_gaussian_for_symmetric_colors() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let out = divcolor(&format!(
        "gamma-sample --nu two-point:-1,1,0.5 --chi-f 0.5 --sigma-p2 0.8 --draws 200000 \
         --format csv --out {}",
        run_dir.display()
    ));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(run_dir.join("report.json").exists());
    let values = read_samples_csv(&run_dir.join("samples.csv")).unwrap();
    assert_eq!(values.len(), 200_000);
    let s = summarize(&values).unwrap();
    assert!((s.variance / 1.3 - 1.0).abs() < 0.02, "variance {}", s.variance);
    assert!(s.excess_kurtosis.unwrap().abs() < 0.05);
}

#[test]
fn rejects_probability_outside_unit_interval() {
    let out = divcolor("estimate --dim 2 --radius 4 --p 1.5");
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--p"));
}

#[test]
fn margin_larger_than_radius_is_an_error() {
    let out = divcolor("estimate --dim 2 --radius 4 --p 0.3 --margin 5");
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn seed_from_environment() {
    let line = "estimate --dim 2 --radius 4 --p 0.6 --replicates 5";
    let seeded = command(line).env("DCL_SEED", "41").output().unwrap();
    assert_eq!(report(&seeded)["config"]["master_seed"], 41);
    assert_eq!(report(&divcolor(line))["config"]["master_seed"], 0);
}
