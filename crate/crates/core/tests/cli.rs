use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gridtwin::pipeline::{sha256_hex, LOCK_FILE, MANIFEST_FILE, METRICS_FILE};

const SMALL: &str = r#"
scenarios = ["CS", "S1", "S2"]
estimators = ["day_before", "week_before", "slp"]
households = 20
replications = 2

[split]
train_days = 370
test_days = 10
"#;

fn gridtwin(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gridtwin"));
    cmd.args(args).arg("--out").arg(out).env("RUST_LOG", "warn");
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().expect("spawn gridtwin")
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn empty_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = gridtwin(&["run"], Some(&config), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("scenarios"), "{stderr}");
}

#[test]
fn unknown_estimator_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "scenarios = [\"CS\"]\nestimators = [\"prophet\"]\n");
    let out = gridtwin(&["run"], Some(&config), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("prophet"));
}

#[test]
fn simulate_requires_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridtwin(&["simulate"], None, dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_flag_exits_with_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_gridtwin"))
        .args(["run", "--no-such-flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn locked_output_directory_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    fs::create_dir_all(&out_dir).unwrap();
    fs::write(out_dir.join(LOCK_FILE), "1").unwrap();
    let out = gridtwin(&["simulate"], Some(&config), &out_dir);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_checksummed_reports_and_evaluate_reproduces_them() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = gridtwin(&["run"], Some(&config), &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.join(LOCK_FILE).exists());

    // three naive rows per scenario would be 9; slp only runs on CS
    let metrics = fs::read_to_string(out_dir.join(METRICS_FILE)).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 3 * 2 + 1);
    assert!(metrics.lines().any(|l| l.starts_with("CS,slp,")));
    assert!(!metrics.lines().any(|l| l.starts_with("S1,slp,")));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join(MANIFEST_FILE)).unwrap()).unwrap();
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(artifacts.len() >= 7);
    for a in artifacts {
        let file = a["file"].as_str().unwrap();
        let bytes = fs::read(out_dir.join(file)).unwrap();
        assert_eq!(a["sha256"].as_str().unwrap(), sha256_hex(&bytes), "{file}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), artifacts.len());

    let before = fs::read(out_dir.join(METRICS_FILE)).unwrap();
    fs::remove_file(out_dir.join(METRICS_FILE)).unwrap();
    let out = gridtwin(&["evaluate"], None, &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(out_dir.join(METRICS_FILE)).unwrap(), before);
}

#[test]
fn generate_writes_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gridtwin"))
        .args(["generate", "--households", "3", "--out"])
        .arg(dir.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let households = fs::read_to_string(dir.path().join("households.csv")).unwrap();
    assert!(households.starts_with("household_id,timestamp,value_kw"));
    assert!(dir.path().join("pv_profiles.csv").exists());
}
