use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn nematic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nematic"))
        .args(args)
        .env_remove("NEMATIC_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

/// Writes `text` as a config in a fresh directory.
fn temp_config(text: &str) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, text).unwrap();
    let p = path.to_string_lossy().into_owned();
    (dir, p)
}

const SMALL: &str = r#"
seed = 4

[grid]
dim = 2
n = 16

[coefficients]
alpha = 1.0
nu = 1.0
epsilon = 0.2

[stepper]
dt = 1e-3
t_end = 0.02

[initial_condition]
preset = "perturbed-director"
amplitude = 0.1
modes = 2
velocity_amplitude = 0.3
"#;

#[test]
fn validate_rod_like_preset_is_case1() {
    let out = nematic(&["validate", "--config", &config("case1_perturbed.toml"), "--structured"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["case1"], true);
    assert_eq!(v["admissible"], true);
}

#[test]
fn validate_positive_lambda1_exits_1() {
    let out = nematic(&["validate", "--config", &config("invalid_lambda1.toml")]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("lambda1<0") && err.contains("lambda1<0"), "{text}\n{err}");

    let out = nematic(&["validate", "--config", &config("invalid_lambda1.toml"), "--structured"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert!(v["report"]["violations"].as_array().unwrap().iter().any(|c| c["name"] == "lambda1<0"));
}

#[test]
fn validate_parodi_free_set_is_case2_only() {
    let out = nematic(&["validate", "--config", &config("case2_only.toml"), "--structured"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["case1"], false);
    assert_eq!(v["report"]["case2"], true);
    assert_eq!(v["regime"], "case2");
}

#[test]
fn parse_errors_name_the_field_and_exit_3() {
    let (_d, p) = temp_config(&SMALL.replace("dt = 1e-3", "dt = \"small\""));
    let out = nematic(&["validate", "--config", &p]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
    let out = nematic(&["run", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(nematic(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(nematic(&["run"]).status.code(), Some(64));
    let (_d, p) = temp_config(SMALL);
    assert_eq!(nematic(&["sweep", "--config", &p, "--axis", "dt", "--values"]).status.code(), Some(64));
    assert_eq!(nematic(&["sweep", "--config", &p, "--axis", "q", "--values", "1"]).status.code(), Some(64));
    assert_eq!(nematic(&["--version"]).status.code(), Some(0));
}

#[test]
fn run_writes_artifacts_deterministically() {
    let (dir, p) = temp_config(&format!("{SMALL}\n[diagnostics]\nsnapshot_every = 10\n"));
    let mut csv = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = nematic(&["run", "--config", &p, "--output-dir", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        for f in ["timeseries.csv", "manifest.json", "checkpoint/meta.json", "snapshots/u_000010.snap", "snapshots/d_000020.snap"] {
            assert!(out_dir.join(f).exists(), "missing {f}");
        }
        csv.push(std::fs::read(out_dir.join("timeseries.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    let text = String::from_utf8(csv.remove(0)).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("time[T],E_total[E],"));
    assert_eq!(lines.count(), 21);

    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["steps"], 20);
    assert!(manifest["config"].as_str().unwrap().contains("perturbed-director"));
    assert!(!manifest["version"].as_str().unwrap().is_empty());
}

#[test]
fn output_dir_comes_from_the_environment() {
    let (dir, p) = temp_config(SMALL);
    let target = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_nematic"))
        .args(["run", "--config", &p, "--cadence", "5"])
        .env("NEMATIC_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(target.join("timeseries.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 1 + 4);
}

#[test]
fn quiescent_run_has_zero_energy() {
    let (dir, p) = temp_config(&SMALL.replace(
        "preset = \"perturbed-director\"\namplitude = 0.1\nmodes = 2\nvelocity_amplitude = 0.3",
        "preset = \"quiescent\"",
    ));
    let out_dir = dir.path().join("q");
    let out = nematic(&["run", "--config", &p, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(out_dir.join("timeseries.csv")).unwrap();
    for line in text.lines().skip(1) {
        let e: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(e.abs() <= 1e-12);
    }
}

#[test]
fn run_rejects_inadmissible_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let out = nematic(&["run", "--config", &config("invalid_lambda1.toml"), "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("timeseries.csv").exists());
}

#[test]
fn blowup_exits_2_with_monitor_record() {
    let (dir, p) = temp_config(&format!("{SMALL}\n").replace("t_end = 0.02", "t_end = 0.02\nvorticity_limit = 1e-3"));
    let out_dir = dir.path().join("b");
    let out = nematic(&["run", "--config", &p, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("monitor.json").exists());
    assert!(out_dir.join("timeseries.csv").exists());
}

#[test]
fn sweep_over_m_reports_gaps() {
    let (_d, p) = temp_config(&SMALL.replace("n = 16", "n = 32"));
    let out = nematic(&["sweep", "--config", &p, "--axis", "M", "--values", "4,8,16", "--structured", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let gaps: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["gap_to_plain"].as_f64().unwrap()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");

    let out = nematic(&["sweep", "--config", &p, "--axis", "dt", "--values", "2e-3,1e-3,5e-4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("fitted order"));
}

#[test]
fn inspect_reports_snapshot_metadata() {
    let (dir, p) = temp_config(SMALL);
    let out_dir = dir.path().join("i");
    assert_eq!(nematic(&["run", "--config", &p, "--output-dir", out_dir.to_str().unwrap()]).status.code(), Some(0));
    let snap = out_dir.join("checkpoint/u.snap");
    let out = nematic(&["inspect", snap.to_str().unwrap(), "--structured"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v[0]["n"], 16);
    assert_eq!(v[0]["components"], 2);
    assert!((v[0]["time"].as_f64().unwrap() - 0.02).abs() < 1e-12);
    assert!(v[0]["sup_divergence"].as_f64().unwrap() < 1e-10);
    let bad = dir.path().join("run.toml");
    assert_eq!(nematic(&["inspect", bad.to_str().unwrap()]).status.code(), Some(3));
}
