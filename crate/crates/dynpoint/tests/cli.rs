//! End-to-end checks of the binary: artifact schema, exit codes, and
//! byte-level determinism across seeds and thread counts.

use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[model]
n = 100.0
t_horizon = 1.0
d = 1
k = 2
delta = 0.25
functional = "pair_indicator"
r_scaling = { coeff = 0.05, exponent = 0.0 }
sigma_scaling = { coeff = 0.02, exponent = 0.0 }

[run]
replicates = 40
grid_spacing = 0.25
lags = [0.0, 0.25, 0.5]
seed = 42
mc_samples = 20000

[output]
directory = "out"
"#;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dynpoint")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn setup(dir: &Path, config: &str) {
    std::fs::write(dir.join("config.toml"), config).unwrap();
}

#[test]
fn simulate_writes_expected_rows() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path(), CONFIG);
    let out = run_in(tmp.path(), &["simulate", "--config", "config.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/trajectories.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "# seed=42");
    assert_eq!(lines.next().unwrap(), "replicate,time,value");
    // 40 replicates x 5 grid points
    assert_eq!(lines.count(), 200);
    let json = std::fs::read_to_string(tmp.path().join("out/trajectories.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["data"]["replicates"], 40);
    assert_eq!(v["provenance"]["seed"], 42);
}

#[test]
fn identical_seeds_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path(), CONFIG);
    let runs = [
        vec!["simulate", "--config", "config.toml", "--out", "a", "--threads", "1"],
        vec!["simulate", "--config", "config.toml", "--out", "b", "--threads", "4"],
        vec!["simulate", "--config", "config.toml", "--out", "c"],
    ];
    for args in &runs {
        let out = run_in(tmp.path(), args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(tmp.path().join("a/trajectories.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/trajectories.csv")).unwrap();
    let c = std::fs::read(tmp.path().join("c/trajectories.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn seed_override_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path(), CONFIG);
    run_in(tmp.path(), &["simulate", "--config", "config.toml", "--out", "a"]);
    run_in(tmp.path(), &["simulate", "--config", "config.toml", "--out", "b", "--seed", "43"]);
    let a = std::fs::read(tmp.path().join("a/trajectories.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/trajectories.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn missing_key_exits_2_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path(), &CONFIG.replace("delta = 0.25\n", ""));
    let out = run_in(tmp.path(), &["simulate", "--config", "config.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn missing_config_flag_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn constants_schema() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path(), CONFIG);
    let out = run_in(tmp.path(), &["constants", "--config", "config.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = std::fs::read_to_string(tmp.path().join("out/constants.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let data = &v["data"];
    // stderr fields present for every MC quantity
    assert!(data["alpha_unit"]["stderr"].is_number());
    for kt in data["kappa_tilde"].as_array().unwrap() {
        assert!(kt["stderr"].is_number());
    }
    // weights sum to 1
    let sum = data["lambda_sum"].as_f64().unwrap();
    assert!((sum - 1.0).abs() < 1e-12);
    // constants oracle at modest MC budget
    let kt1 = data["kappa_tilde"][0]["value"].as_f64().unwrap();
    let kt2 = data["kappa_tilde"][1]["value"].as_f64().unwrap();
    assert!((kt1 - 0.25).abs() < 0.02, "{kt1}");
    assert!((kt2 - 0.5).abs() < 0.02, "{kt2}");
}

#[test]
fn covariance_schema_and_lag_zero() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path(), CONFIG);
    let out = run_in(tmp.path(), &["covariance", "--config", "config.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/covariance.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[2], "lag,theoretical,empirical,stderr,regime");
    let first: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(first[4], "moderate");
    // lag-0 empirical normalized covariance is 1 by construction
    let lag0: f64 = first[2].parse().unwrap();
    assert!((lag0 - 1.0).abs() < 0.03, "{lag0}");
}

#[test]
fn covariance_refuses_invalid_fast_config() {
    // fast scaling with d(k-1) = 1 < 3: the limit theorem does not apply
    let cfg = CONFIG
        .replace(
            "r_scaling = { coeff = 0.05, exponent = 0.0 }",
            "r_scaling = { coeff = 1.0, exponent = 0.6 }",
        )
        .replace(
            "sigma_scaling = { coeff = 0.02, exponent = 0.0 }",
            "sigma_scaling = { coeff = 1.0, exponent = 0.55 }",
        );
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path(), &cfg);
    let out = run_in(tmp.path(), &["covariance", "--config", "config.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("d(k-1)"), "{msg}");
}

#[test]
fn regime_reports_conditions() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path(), CONFIG);
    let out = run_in(tmp.path(), &["regime", "--config", "config.toml"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["regime"], "moderate");
    assert!(v["conditions"].as_array().unwrap().len() >= 2);
}

#[test]
fn verify_geometry_and_functional_pass() {
    let tmp = tempfile::tempdir().unwrap();
    setup(tmp.path(), CONFIG);
    let out = run_in(
        tmp.path(),
        &["verify", "--config", "config.toml", "--suites", "geometry,functional"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS geometry"));
    assert!(text.contains("PASS functional"));
    assert!(!text.contains("FAIL"));
    // unknown suite is a config error
    let out = run_in(tmp.path(), &["verify", "--config", "config.toml", "--suites", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}
