use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn livsic(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_livsic"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("LIVSIC_OUT")
        .output()
        .expect("spawn livsic")
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn help_lists_subcommands_and_flags() {
    let out = Command::new(env!("CARGO_BIN_EXE_livsic")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for word in ["experiment", "obstruction", "reconstruct", "tower", "hofbauer", "lyapunov", "--out", "--seed", "--verbose"] {
        assert!(text.contains(word), "missing {word} in\n{text}");
    }
    let sub = Command::new(env!("CARGO_BIN_EXE_livsic")).args(["obstruction", "--help"]).output().unwrap();
    assert_eq!(sub.status.code(), Some(0));
    let text = String::from_utf8(sub.stdout).unwrap();
    for flag in ["--map", "--a", "--max-period", "--tol", "--expect"] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn lyapunov_of_doubling() {
    let dir = tempfile::tempdir().unwrap();
    let out = livsic(dir.path(), &["lyapunov", "--map", "doubling", "--iters", "100000"]);
    assert_eq!(out.status.code(), Some(0));
    let lambda = summary(dir.path())["metrics"]["lambda"].as_f64().unwrap();
    assert!((lambda - 2f64.ln()).abs() < 1e-3);
    assert!(dir.path().join("lyapunov.csv").exists());
}

#[test]
fn obstruction_chebyshev_and_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let out = livsic(dir.path(), &["obstruction", "--map", "quadratic", "--a", "2", "--max-period", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path());
    assert!(s["metrics"]["max_residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(s["verdicts"]["obstruction"], "coboundary-consistent");
    let csv = fs::read_to_string(dir.path().join("obstruction.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("period"));

    let failed = livsic(dir.path(), &["obstruction", "--a", "1.9", "--max-period", "4", "--expect", "coboundary"]);
    assert_eq!(failed.status.code(), Some(1));
}

#[test]
fn mp_scaling_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("mp_p1.json");
    let out = livsic(dir.path(), &["experiment", "mp_scaling", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let slope = summary(dir.path())["metrics"]["fitted_exponent"].as_f64().unwrap();
    assert!((slope + 2.0).abs() < 0.2, "slope {slope}");
}

#[test]
fn identical_invocations_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "11", "experiment", "chebyshev", "grid_size=32", "max_period=5"];
    assert_eq!(livsic(a.path(), &args).status.code(), Some(0));
    assert_eq!(livsic(b.path(), &args).status.code(), Some(0));
    for f in ["chebyshev.csv", "chebyshev_checks.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn overrides_are_last_wins() {
    let dir = tempfile::tempdir().unwrap();
    let out = livsic(dir.path(), &["experiment", "chebyshev", "grid_size=64", "grid_size=16", "max_period=4"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("chebyshev.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(livsic(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(livsic(dir.path(), &["experiment", "chebyshev", "novalue"]).status.code(), Some(2));
    assert_eq!(livsic(dir.path(), &["experiment", "nonsense"]).status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"experiment": "chebyshev", "grid_sise": 3, "tol": "small", "seed": -1}"#).unwrap();
    let out = livsic(dir.path(), &["experiment", "chebyshev", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    for key in ["grid_sise", "tol", "seed"] {
        assert!(err.contains(key), "{key} not reported in\n{err}");
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_livsic"))
        .args(["hofbauer", "--map", "tent", "--depth", "6", "--steps", "1000"])
        .env("LIVSIC_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(target.join("hofbauer_edges.txt")).unwrap(), "0 0 1\n0 1 1\n1 0 1\n1 1 1\n");
    assert!(target.join("summary.json").exists());
}

#[test]
fn tower_and_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let out = livsic(dir.path(), &["tower", "--map", "doubling", "--base", "0.5,1", "--max-return", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let kac = summary(dir.path())["metrics"]["kac"].as_f64().unwrap();
    assert!((kac - 2.0).abs() < 0.04);

    let out = livsic(dir.path(), &["reconstruct", "--map", "doubling", "--cocycle", "piecewise", "--grid", "33"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(summary(dir.path())["metrics"]["sup_error_up_to_constant"].as_f64().unwrap() < 1e-6);
    assert_eq!(livsic(dir.path(), &["tower", "--base", "1,0"]).status.code(), Some(2));
}
