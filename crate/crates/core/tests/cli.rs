use std::path::Path;
use std::process::{Command, Output};

fn roughsing(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roughsing")).args(args).current_dir(dir).env_remove("ROUGHSING_THREADS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{"grid": {"n": 2, "M": 32, "L": 2}, "Omega": {"type": "harmonic", "m": 2},
    "weights": [{"type": "power", "alpha": 0.5}], "norm": {"trials": 1, "max_iterations": 20}"#;

#[test]
fn weights_prints_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "w.json", &format!("{SMALL}}}"));
    let out = roughsing(&["weights", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v[0]["ap"].as_f64().unwrap() > 1.0);
    assert!(dir.path().join("runs").read_dir().unwrap().count() == 1);
}

#[test]
fn scaling_check_passes_and_fails_on_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#", "experiment": {"alphas": [0, 0.3, -0.3, 0.6, -0.6]}"#;
    let ok = write(dir.path(), "ok.json", &format!("{SMALL}{body}}}"));
    let out = roughsing(&["scaling", "--config", &ok, "--check", "--json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let strict = write(dir.path(), "strict.json", &format!("{SMALL}{body}, \"tolerances\": {{\"scaling_slope_max\": -5}}}}"));
    let out = roughsing(&["scaling", "--config", &strict, "--check", "--no-write"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL slope"));
}

#[test]
fn config_errors_exit_two_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"grid": {"n": 2, "M": 32, "L": -1}, "Omega": {"type": "harmonic", "m": 2}}"#);
    let out = roughsing(&["opnorm", "--config", &bad], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let typo = write(dir.path(), "typo.json", r#"{"grid": {"n": 2, "M": 32, "L": 1}, "Omega": {"type": "harmonic", "m": 2}, "experiment": {"pp": 2}}"#);
    let out = roughsing(&["opnorm", "--config", &typo], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment"));
    let out = roughsing(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn strict_mode_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &format!("{SMALL}}}"));
    let args = ["opnorm", "--config", &cfg, "--no-write", "--max-iterations", "2"];
    assert_eq!(roughsing(&args, dir.path()).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(roughsing(&strict, dir.path()).status.code(), Some(3));
}

#[test]
fn selftest_and_fault_injection() {
    let dir = tempfile::tempdir().unwrap();
    let out = roughsing(&["selftest", "--json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    let out = roughsing(&["selftest", "--inject-fault"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn apply_writes_the_output_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.json", &format!("{SMALL}}}"));
    let out = roughsing(&["apply", "--config", &cfg, "--json", "--threads", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let run = dir.path().join(v["paths"]["dir"].as_str().unwrap());
    let g = roughsing::GridFunction::read_binary(&run.join("output.bin")).unwrap();
    assert_eq!(g.spec().points(), 32);
}

#[test]
fn every_experiment_runs_on_a_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.json", &format!("{SMALL}, \"experiment\": {{\"jmax\": 2, \"samples\": 20, \"i_range\": [2, 5]}}}}"));
    for cmd in ["decay", "growth", "multiplier", "kernelcheck", "dini", "interp"] {
        let out = roughsing(&[cmd, "--config", &cfg, "--json"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["experiment"], cmd);
    }
}
