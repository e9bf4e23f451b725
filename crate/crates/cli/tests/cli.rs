//! End-to-end tests of the command line surface: exit codes, JSON report
//! shapes, and byte-identical reruns.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_volterra"))
}

fn write_config(dir: &std::path::Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("volterra-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const CIR_SMALL: &str = "
schema_version = 1

[kernel]
family = constant
value = 1.0

[model]
kind = affine
b0 = 0.3
B = -0.5
sigma = 0.4
x0 = 0.2

[domain]
kind = orthant
dimension = 1

[scheme]
steps = 40
paths = 400
horizon = 1.0
variant = check
domain_mode = enforce
seed = 11

[riccati]
grid_steps = 200
f_const = -1.0
";

#[test]
fn check_kernel_reports_pass_for_exp_product() {
    let dir = tmpdir("checkpass");
    let cfg = write_config(
        &dir,
        "k.cfg",
        "schema_version = 1\n[kernel]\nfamily = exp_product\nb = const:1.0\nc = const:1.0\nrate = linear:1.0\n",
    );
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()])
        .args(["check-kernel", "--max-l", "4", "--samples", "60"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["passed"], serde_json::json!(true));
    assert!(dir.join("check_kernel.json").exists());
}

#[test]
fn check_kernel_exits_two_on_falsified_kernel() {
    let dir = tmpdir("checkfail");
    let cfg = write_config(
        &dir,
        "k.cfg",
        "schema_version = 1\n[kernel]\nfamily = affine\nintercept = 1.0\nslope = 1.0\n",
    );
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()])
        .args(["check-kernel", "--max-l", "3", "--samples", "80"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["passed"], serde_json::json!(false));
    assert_eq!(json["witness_times"].as_array().unwrap().len(), 3);
}

#[test]
fn bad_config_exits_one() {
    let dir = tmpdir("badcfg");
    let cfg = write_config(&dir, "k.cfg", "schema_version = 1\n[kernel]\nfamily = constant\nvalue = 1.0\nbogus = 3\n");
    let out = bin()
        .args(["--config", cfg.to_str().unwrap()])
        .args(["check-kernel"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn simulate_writes_deterministic_csv() {
    let dir = tmpdir("simdet");
    let cfg = write_config(&dir, "cir.cfg", CIR_SMALL);
    let run = |name: &str| {
        let out_path = dir.join(name);
        let out = bin()
            .args(["--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()])
            .args(["simulate", "--paths", "50", "--out", out_path.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(&out_path).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b, "reruns must be byte-identical");
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "path_id,t,component_index,value");
    let first = lines.next().unwrap();
    assert_eq!(first, "0,0,0,0.2");
    // 50 paths x 41 grid points + header
    assert_eq!(text.lines().count(), 1 + 50 * 41);
}

#[test]
fn riccati_emits_csv_and_summary() {
    let dir = tmpdir("riccati");
    let cfg = write_config(&dir, "cir.cfg", CIR_SMALL);
    let out_path = dir.join("psi.csv");
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()])
        .args(["riccati", "--alpha", "0.75", "--grid-steps", "400", "--out", out_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(json["laplace_value"].as_f64().unwrap() > 0.0);
    assert!(json["laplace_value"].as_f64().unwrap() <= 1.0);
    assert!(json["fractional_check_value"].as_f64().is_some());
    let rel = (json["laplace_value"].as_f64().unwrap()
        - json["fractional_check_value"].as_f64().unwrap())
    .abs()
        / json["laplace_value"].as_f64().unwrap();
    assert!(rel < 1e-3, "solver disagreement {rel}");
    let csv = fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("t,component,psi\n"));
    assert_eq!(csv.lines().count(), 1 + 401);
}

#[test]
fn validate_small_run_passes_and_writes_report() {
    let dir = tmpdir("validate");
    let cfg = write_config(&dir, "cir.cfg", CIR_SMALL);
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()])
        .args(["--threads", "1"])
        .arg("validate")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(json["z_score"].as_f64().unwrap().abs() <= 3.0);
    assert_eq!(json["invariance_violations"], serde_json::json!(0));
    assert!(dir.join("validate.json").exists());
}

#[test]
fn holder_with_exponents_adds_path_statistics() {
    let dir = tmpdir("holderpaths");
    let cfg = write_config(
        &dir,
        "brownian.cfg",
        "schema_version = 1
         [kernel]
family = constant
value = 1.0
         [model]
kind = brownian
dimension = 1
sigma = 1.0
x0 = 0.0
         [domain]
kind = orthant
dimension = 1
         [scheme]
steps = 100
paths = 150
horizon = 1.0
variant = check
domain_mode = off
seed = 3
",
    );
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()])
        .args(["holder", "--gaps", "6", "--bases", "4", "--exponents", "0.4,0.6"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let stats = json["path_stats"].as_array().unwrap();
    assert_eq!(stats.len(), 2);
    // the rougher exponent always dominates on a discrete grid
    assert!(stats[1]["median"].as_f64().unwrap() > stats[0]["median"].as_f64().unwrap());
}

#[test]
fn holder_fit_reports_fractional_exponent() {
    let dir = tmpdir("holder");
    let cfg = write_config(
        &dir,
        "k.cfg",
        "schema_version = 1\n[kernel]\nfamily = fractional\nalpha = 0.75\n",
    );
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()])
        .args(["holder", "--gaps", "8", "--bases", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let gamma = json["gamma_hat"].as_f64().unwrap();
    assert!((gamma - 0.25).abs() < 0.03, "gamma_hat {gamma}");
}
