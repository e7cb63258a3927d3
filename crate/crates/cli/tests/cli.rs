use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multibump"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("MULTIBUMP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn profile_constants_are_written_with_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["profile"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = json_file(&dir.path().join("profile_constants.json"));
    assert_eq!(rec["schema"], "multibump.profile.constants/v1");
    assert!((rec["constants"]["c0"].as_f64().unwrap() - 1.2).abs() < 1e-10);
    let m = json_file(&dir.path().join("profile.manifest.json"));
    assert_eq!(m["schema"], "multibump.manifest/v1");
    assert_eq!(m["threads"], 2);
    assert_eq!(m["artifacts"][0], "profile_constants.json");
}

#[test]
fn csv_headers_are_versioned() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["profile", "--emit", "samples", "--xmax", "3", "--h", "0.5"]).status.success());
    let text = fs::read_to_string(dir.path().join("profile_samples.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# multibump-profile v1 "));
    assert_eq!(lines.next().unwrap(), "x,w,wp,wpp,Z");
    assert_eq!(lines.count(), 13);
}

#[test]
fn manifest_replay_reproduces_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = run(a.path(), &["toda", "--k", "3", "--alpha", "1", "--zmax", "40"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = a.path().join("toda.manifest.json");
    let o = run(b.path(), &["--config", manifest.to_str().unwrap(), "toda"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let name = "toda_trajectory.csv";
    assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"alpha": 0.3, "k": 3, "emit": "asymptotics"}"#).unwrap();
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "toda", "--alpha", "0.2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = json_file(&dir.path().join("toda_asymptotics.json"));
    assert_eq!(rec["alpha"], 0.2);
    assert_eq!(rec["k"], 3);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["residual-sweep", "--alphas", "0.1,abc"]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"alphas": [0.1, "x"]}"#).unwrap();
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "residual-sweep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alphas[1]"));

    fs::write(&cfg, r#"{"subcommand": "solve"}"#).unwrap();
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "profile"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(dir.path(), &["ansatz", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));

    let o = Command::new(env!("CARGO_BIN_EXE_multibump"))
        .args(["--out", dir.path().to_str().unwrap(), "profile"])
        .env("MULTIBUMP_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // One Newton step is not enough to reach the tolerance.
    let o = run(dir.path(), &["solve", "--k", "1", "--alpha", "0.3", "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn linear_check_reports_all_three_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["linear-check"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = json_file(&dir.path().join("linear_check.json"));
    assert!(rec["resonance"]["violation_detected"].as_bool().unwrap());
    assert!(rec["linearized_toda"]["round_trip_error"].as_f64().unwrap() < 1e-8);
    for r in rec["kernel"]["ratios"].as_array().unwrap() {
        assert!((3.5..=4.5).contains(&r.as_f64().unwrap()));
    }
}
