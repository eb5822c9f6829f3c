//! End-to-end tests of the binary: exit codes, artifact determinism, and
//! configuration validation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_papdyn")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn golden() -> String {
    configs_dir().join("two_neuron.toml").to_string_lossy().into_owned()
}

#[test]
fn check_passes_on_golden_config() {
    let out = run(&["check", "--config", &golden()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("L = 0.4"), "{text}");
    assert!(text.contains("p1 = 0.75"), "{text}");
    assert!(text.contains("ball_radius = 1.2"), "{text}");
}

#[test]
fn check_fails_on_overdriven_config() {
    let cfg = configs_dir().join("two_neuron_overdriven.toml");
    let out = run(&["check", "--config", &cfg.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("q1 = 1.8"), "{text}");
}

#[test]
fn missing_config_is_a_config_error() {
    let out = run(&["check", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dimension_mismatch_is_a_config_error() {
    let text = fs::read_to_string(configs_dir().join("two_neuron.toml")).unwrap();
    // drop one entry from the first d-row: 2x2 becomes ragged
    let broken = text.replace(
        r#"["(2*sin(t)+exp(-t))/10", "cos(t)/10"],"#,
        r#"["(2*sin(t)+exp(-t))/10"],"#,
    );
    assert_ne!(text, broken);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, broken).unwrap();
    let out = run(&["check", "--config", &path.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.d"));
}

#[test]
fn zero_delay_is_a_config_error() {
    let text = fs::read_to_string(configs_dir().join("two_neuron.toml")).unwrap();
    let broken = text.replace(
        "tau = [[1.0, 1.0], [1.0, 1.0]]",
        "tau = [[0.0, 1.0], [1.0, 1.0]]",
    );
    assert_ne!(text, broken);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, broken).unwrap();
    let out = run(&["check", "--config", &path.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_expression_is_a_config_error() {
    let text = fs::read_to_string(configs_dir().join("two_neuron.toml")).unwrap();
    let broken = text.replace(r#"c = ["2", "2"]"#, r#"c = ["2", "2 +"]"#);
    assert_ne!(text, broken);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, broken).unwrap();
    let out = run(&["check", "--config", &path.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let out = run(&[
            "simulate",
            "--config",
            &golden(),
            "--out",
            &d.path().to_string_lossy(),
            "--step",
            "0.01",
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(d1.path().join("trajectory.csv")).unwrap();
    let b = fs::read(d2.path().join("trajectory.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "two runs must emit byte-identical CSV");
}

#[test]
fn simulate_zero_model_emits_all_zero_csv() {
    let config = r#"
[model]
n = 1
c = ["1"]
inputs = ["0"]
d = [["0"]]
a = [["0"]]
b = [[["0"]]]
tau = [[1.0]]
sigma = [[1.0]]
nu_delay = [[1.0]]

[model.activations]
f = ["sine"]
g = ["sine"]
h = ["sine"]

[history]
kind = "constant"
values = [0.0]

[measures.mu]
density = "exp(sin(t))"

[measures.nu]
density = "1"

[simulate]
t_end = 2.0
"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.toml");
    fs::write(&path, config).unwrap();
    let out = run(&[
        "simulate",
        "--config",
        &path.to_string_lossy(),
        "--out",
        &dir.path().to_string_lossy(),
        "--step",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let x: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(x, 0.0);
    }
}

#[test]
fn solve_writes_reports_and_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--config",
        &golden(),
        "--out",
        &dir.path().to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("solution.csv").exists());
    assert!(dir.path().join("report.txt").exists());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], serde_json::Value::Bool(true));
    assert!(json["solve"]["residual"].as_f64().unwrap() < 1e-7);
}

#[test]
fn solve_refuses_overdriven_config() {
    let cfg = configs_dir().join("two_neuron_overdriven.toml");
    let out = run(&["solve", "--config", &cfg.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_round_trips_through_serialization() {
    let text = fs::read_to_string(configs_dir().join("two_neuron.toml")).unwrap();
    let parsed = papdyn_cli::config::parse_config(&text).unwrap();
    let emitted = toml::to_string(&parsed).unwrap();
    let reparsed = papdyn_cli::config::parse_config(&emitted).unwrap();
    assert_eq!(
        toml::to_string(&parsed).unwrap(),
        toml::to_string(&reparsed).unwrap(),
        "round-trip must preserve every field"
    );
    assert_eq!(parsed.model.n, 2);
    assert_eq!(reparsed.tolerances.step, 1e-3);
}
