//! End-to-end runs of the `vortex-waves` binary.

use serde_json::Value;
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortex-waves")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, out: &str, body: &str) -> String {
    let path = dir.join(name);
    let text = format!("output_dir = {:?}\n{body}", dir.join(out).display().to_string());
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn periodic(steps: usize) -> String {
    format!(
        "problem = \"point-vortex-periodic\"\n[physics]\ng = 1.0\nalpha = 1.0\nL = 1.0\n[continuation]\nn_steps = {steps}\n"
    )
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn periodic_branch_has_header_and_one_line_per_step() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", "out", &periodic(20));
    let out = run(&["continue", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir.path().join("out/branch.ndjson"));
    assert_eq!(text.lines().count(), 21);
    let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(header["meta"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(header["meta"]["config_sha256"].as_str().unwrap().len(), 64);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("epsilon") && stdout.contains("1+eta(0)"));
}

#[test]
fn zero_step_is_a_configuration_error() {
    let dir = TempDir::new().unwrap();
    let body = periodic(20).replace("[continuation]\n", "[continuation]\nds = 0.0\n");
    let cfg = write_config(dir.path(), "run.toml", "out", &body);
    let out = run(&["continue", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out/branch.ndjson").exists());
}

#[test]
fn resumed_branch_matches_a_single_run() {
    let dir = TempDir::new().unwrap();
    let half = write_config(dir.path(), "half.toml", "half", &periodic(10));
    let full = write_config(dir.path(), "full.toml", "full", &periodic(20));
    let resumed = write_config(dir.path(), "resumed.toml", "resumed", &periodic(20));
    assert_eq!(run(&["continue", "--config", &half]).status.code(), Some(0));
    assert_eq!(run(&["continue", "--config", &full]).status.code(), Some(0));
    let checkpoint = dir.path().join("half/branch.ndjson").display().to_string();
    assert_eq!(run(&["continue", "--config", &resumed, "--resume", &checkpoint]).status.code(), Some(0));
    let a = read(&dir.path().join("full/branch.ndjson"));
    let b = read(&dir.path().join("resumed/branch.ndjson"));
    // points are bit-identical; the headers differ only in the echoed config
    assert_eq!(a.lines().skip(1).collect::<Vec<_>>(), b.lines().skip(1).collect::<Vec<_>>());
    let (ha, hb): (Value, Value) = (serde_json::from_str(a.lines().next().unwrap()).unwrap(), serde_json::from_str(b.lines().next().unwrap()).unwrap());
    assert_eq!(ha["seed"], hb["seed"]);
    assert_eq!(ha["params"], hb["params"]);
}

#[test]
fn resume_with_other_parameters_is_rejected() {
    let dir = TempDir::new().unwrap();
    let first = write_config(dir.path(), "a.toml", "a", &periodic(2));
    let other = write_config(dir.path(), "b.toml", "b", &periodic(4).replace("alpha = 1.0", "alpha = 2.0"));
    assert_eq!(run(&["continue", "--config", &first]).status.code(), Some(0));
    let checkpoint = dir.path().join("a/branch.ndjson").display().to_string();
    assert_eq!(run(&["continue", "--config", &other, "--resume", &checkpoint]).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = write_config(dir.path(), "a.toml", "a", &periodic(5));
    let b = write_config(dir.path(), "b.toml", "a2", &periodic(5));
    assert_eq!(run(&["continue", "--config", &a]).status.code(), Some(0));
    let first = read(&dir.path().join("a/branch.ndjson"));
    assert_eq!(run(&["continue", "--config", &a]).status.code(), Some(0));
    assert_eq!(first, read(&dir.path().join("a/branch.ndjson")));
    // same text apart from the output directory: same points
    assert_eq!(run(&["continue", "--config", &b]).status.code(), Some(0));
    let other = read(&dir.path().join("a2/branch.ndjson"));
    assert_eq!(first.lines().skip(1).collect::<Vec<_>>(), other.lines().skip(1).collect::<Vec<_>>());
}

#[test]
fn localized_sweep_runs() {
    let dir = TempDir::new().unwrap();
    let body = "problem = \"point-vortex-localized\"\n[grid]\nn = 256\nhalf_width = 60.0\n[continuation]\nds = 0.01\nn_steps = 3\n";
    let cfg = write_config(dir.path(), "run.toml", "out", body);
    let out = run(&["continue", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&dir.path().join("out/branch.ndjson")).lines().count(), 4);
}

#[test]
fn default_patch_speed_is_near_point_vortex_value() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", "out", "problem = \"vortex-patch\"\n");
    let out = run(&["patch", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&read(&dir.path().join("out/patch_quadratic.json"))).unwrap();
    let c_over_eps = v["c"].as_f64().unwrap() / v["epsilon"].as_f64().unwrap();
    assert!((c_over_eps + 1.0 / (4.0 * PI)).abs() < 0.1);
    assert_eq!(v["boundary_curve"].as_array().unwrap().len(), 256);
    for key in ["beta_coeffs", "eta_values", "psi_values", "a", "mu", "meta"] {
        assert!(!v[key].is_null(), "{key}");
    }
    let csv = read(&dir.path().join("out/patch_quadratic_boundary.csv"));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert_eq!(lines.next(), Some("theta,x1,x2"));
    assert_eq!(lines.count(), 256);
}

#[test]
fn patch_outside_the_box_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", "out", "problem = \"vortex-patch\"\n[patch]\ntau = 0.5\n");
    let out = run(&["patch", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
}

#[test]
fn unknown_keys_and_commands_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", "out", "problem = \"vortex-patch\"\ncolour = 3\n");
    assert_eq!(run(&["patch", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(run(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["patch", "--config", "/nonexistent/run.toml"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_suites_report_pass_marks() {
    let out = run(&["verify", "radial"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion")).count(), 4);
    assert!(text.contains("κ"));
    let out = run(&["verify", "green"]);
    assert_eq!(out.status.code(), Some(0));
}
