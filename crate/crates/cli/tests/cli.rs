use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn carl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carl"))
        .args(args)
        .env_remove("CARL_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn carl_in(dir: &Path, args: &[&str]) -> Output {
    let mut full = vec!["--out", dir.to_str().unwrap()];
    full.extend_from_slice(args);
    carl(&full)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn metadata(dir: &Path, command: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{command}.json"))).unwrap()).unwrap()
}

/// Parses a one-row CSV into (header, values).
fn single_row(path: &Path) -> Vec<(String, String)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string);
    let row = lines.next().unwrap().split(',').map(str::to_string);
    header.zip(row).collect()
}

fn field(row: &[(String, String)], key: &str) -> f64 {
    row.iter().find(|(k, _)| k == key).unwrap().1.parse().unwrap()
}

#[test]
fn stability_near_threshold() {
    let tmp = TempDir::new().unwrap();
    let out = carl_in(tmp.path(), &["stability", "--kappa", "0.1", "--D", "2.1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let row = single_row(&tmp.path().join("stability.csv"));
    assert!((field(&row, "shift_over_kc") - 4.55).abs() < 0.01);
    assert!(field(&row, "re_lambda") < 0.0);

    let meta = metadata(tmp.path(), "stability");
    assert_eq!(meta["command"], "stability");
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["config.model.kappa"], 0.1);
    assert_eq!(meta["config.model.D"], 2.1);
    assert!(meta["timestamp"].as_str().unwrap().contains('T'));
    assert_eq!(meta["files"], serde_json::json!(["stability.csv"]));
}

#[test]
fn flags_override_config_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "seed = 9\n\n[model]\nkappa = 0.5\nD = 0.3\n").unwrap();
    let out = carl_in(
        tmp.path(),
        &["--config", cfg.to_str().unwrap(), "steady", "--kappa", "0.2"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let meta = metadata(tmp.path(), "steady");
    assert_eq!(meta["config.model.kappa"], 0.2);
    assert_eq!(meta["config.model.D"], 0.3);
    assert_eq!(meta["seed"], 9);
    assert!(meta["run.residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn range_error_names_key_and_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "# comment\n[model]\nD = 1.0\nkappa = -1\n").unwrap();
    let out = carl_in(tmp.path(), &["--config", cfg.to_str().unwrap(), "stability"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("model.kappa"), "{err}");
    assert!(err.contains("line 4"), "{err}");
    assert!(!tmp.path().join("stability.json").exists());
}

#[test]
fn invalid_flag_value_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = carl_in(tmp.path(), &["simulate-fp", "--n-max", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("fp.n_max"));
}

#[test]
fn unknown_flag_and_unknown_key_are_usage_errors() {
    let out = carl(&["stability", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));

    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("typo.toml");
    fs::write(&cfg, "[model]\nkapa = 1\n").unwrap();
    let out = carl_in(tmp.path(), &["--config", cfg.to_str().unwrap(), "stability"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("kapa"));
}

#[test]
fn solver_failure_exits_one_with_residual() {
    let tmp = TempDir::new().unwrap();
    let out = carl_in(tmp.path(), &["threshold", "--kappa", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("residual"), "{err}");
}

#[test]
fn output_directory_precedence() {
    let env_dir = TempDir::new().unwrap();
    let flag_dir = TempDir::new().unwrap();
    let run = |extra: &[&str]| {
        let mut args = extra.to_vec();
        args.push("stability");
        Command::new(env!("CARGO_BIN_EXE_carl"))
            .args(&args)
            .env("CARL_OUT_DIR", env_dir.path())
            .output()
            .unwrap()
    };
    assert!(run(&[]).status.success());
    assert!(env_dir.path().join("stability.csv").exists());
    assert!(run(&["--out", flag_dir.path().to_str().unwrap()]).status.success());
    assert!(flag_dir.path().join("stability.csv").exists());
}

#[test]
fn sde_output_is_reproducible_for_a_seed() {
    let runs: Vec<TempDir> = (0..3).map(|_| TempDir::new().unwrap()).collect();
    for (dir, seed) in runs.iter().zip(["4", "4", "5"]) {
        let out = carl_in(
            dir.path(),
            &[
                "--seed",
                seed,
                "simulate-sde",
                "--particles",
                "300",
                "--t-end",
                "5",
                "--seed-field",
                "0.01",
            ],
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let read = |d: &TempDir| fs::read(d.path().join("sde_trajectory.csv")).unwrap();
    assert_eq!(read(&runs[0]), read(&runs[1]));
    assert_ne!(read(&runs[0]), read(&runs[2]));
}

#[test]
fn fig2_writes_four_panels_with_frozen_parameters() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[model]\nkappa = 3.0\nD = 0.1\n\n[fp]\nt_end = 120.0\n").unwrap();
    let out = carl_in(tmp.path(), &["--config", cfg.to_str().unwrap(), "fig2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    for panel in ["fig2a_intensity", "fig2b_bunching", "fig2c_frequency", "fig2d_density"] {
        let text = fs::read_to_string(tmp.path().join(format!("{panel}.csv"))).unwrap();
        assert!(text.lines().count() > 100, "{panel} is too short");
    }
    let meta = metadata(tmp.path(), "fig2");
    assert_eq!(meta["config.model.kappa"], 0.075);
    assert_eq!(meta["config.model.D"], 1.49);
    assert_eq!(meta["config.fp.t_end"], 120.0);
    assert_eq!(meta["run.under_resolved"], false);
}

#[test]
fn sweep_marks_points_above_threshold() {
    let tmp = TempDir::new().unwrap();
    let out = carl_in(
        tmp.path(),
        &[
            "sweep-d", "--kappa", "0.1", "--d-min", "1.9", "--d-max", "2.3", "--points", "5",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(tmp.path().join("sweep_d.csv")).unwrap();
    let below: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(5).unwrap()).collect();
    assert_eq!(below, ["false", "false", "true", "true", "true"]);
}

#[test]
fn scaling_fit_reports_exponents() {
    let tmp = TempDir::new().unwrap();
    let out = carl_in(
        tmp.path(),
        &["verify-scaling", "--sweep", "temperature", "--regime", "good"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let row = single_row(&tmp.path().join("scaling_fit.csv"));
    assert!((field(&row, "pump_exponent") - 1.5).abs() < 0.05);
    assert!((field(&row, "shift_exponent") - 0.5).abs() < 0.05);
}
