use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hankel-spectra"))
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = bin();
    c.args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ten_atoms() -> String {
    let atoms: Vec<String> = (0..10)
        .map(|i| format!(r#"{{"x":{:?},"w":{:?}}}"#, 0.1 * 100f64.powf(i as f64 / 9.0), 1.0 + i as f64))
        .collect();
    format!(r#"{{"type":"atomic","atoms":[{}]}}"#, atoms.join(","))
}

#[test]
fn map_fixed_point_row() {
    let dir = TempDir::new().unwrap();
    let mu = write(&dir, "mu.json", r#"{"type":"atomic","atoms":[{"x":1.0,"w":2.0}]}"#);
    let out = dir.path().join("sigma.csv");
    let o = run(&["map", "--input", s(&mu), "--solver", "accurate", "--output", s(&out)], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&out).unwrap(), "lambda,mass\n1.0,2.0\n");
}

#[test]
fn sharp_map_of_a_point_mass() {
    let dir = TempDir::new().unwrap();
    let mu = write(&dir, "mu.json", r#"{"type":"atomic","atoms":[{"x":2.0,"w":3.0}]}"#);
    let o = run(&["sharp-map", "--input", s(&mu)], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "lambda,mass\n0.75,0.75\n");
}

#[test]
fn check_involution_passes_on_ten_atoms() {
    let dir = TempDir::new().unwrap();
    let mu = write(&dir, "mu.json", &ten_atoms());
    let o = run(&["check", "involution", "--input", s(&mu), "--tol", "1e-6"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["results"][0]["report"]["mass_error"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn check_exits_one_on_tolerance_failure() {
    let dir = TempDir::new().unwrap();
    let mu = write(&dir, "mu.json", &ten_atoms());
    let o = run(&["check", "involution", "--input", s(&mu), "--tol", "1e-30"], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn batch_check_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "[{},{},{}]",
        ten_atoms(),
        r#"{"type":"atomic","atoms":[{"x":1.0,"w":1.0},{"x":2.0,"w":1.0}]}"#,
        r#"{"type":"atomic","atoms":[{"x":0.5,"w":4.0}]}"#
    );
    let mu = write(&dir, "batch.json", &body);
    let args = ["check", "all", "--input", s(&mu)];
    let seq = run(&args, &[("HANKEL_SPECTRA_THREADS", "0")]);
    let par = run(&args, &[("HANKEL_SPECTRA_THREADS", "3")]);
    assert_eq!(seq.status.code(), Some(0));
    assert_eq!(seq.stdout, par.stdout);
    let v: serde_json::Value = serde_json::from_slice(&seq.stdout).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 3);
}

#[test]
fn hankel_suite() {
    let dir = TempDir::new().unwrap();
    let mu = write(&dir, "mu.json", r#"{"type":"atomic","atoms":[{"x":1.0,"w":1.0},{"x":3.0,"w":2.0}]}"#);
    let o = run(&["check", "hankel", "--input", s(&mu)], &[]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["check", "hankel", "--input", s(&mu), "--t-max", "0.5", "--hankel-points", "40"], &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn parse_and_io_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"type":"atomic","atoms":[{"x":-1.0,"w":1.0}]}"#);
    assert_eq!(run(&["map", "--input", s(&bad)], &[]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["map", "--input", s(&missing)], &[]).status.code(), Some(2));
    assert_eq!(run(&["map", "--bogus"], &[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], &[]).status.code(), Some(2));
}

#[test]
fn coincident_nodes_exit_three() {
    let dir = TempDir::new().unwrap();
    let mu = write(
        &dir,
        "mu.json",
        r#"{"type":"atomic","atoms":[{"x":1.0,"w":1.0},{"x":1.0000000000000002,"w":1.0}]}"#,
    );
    assert_eq!(run(&["map", "--input", s(&mu)], &[]).status.code(), Some(3));
}

#[test]
fn classify_and_discretize_density() {
    let dir = TempDir::new().unwrap();
    let mu = write(&dir, "d.json", r#"{"type":"density","kind":"exp_scale","params":{"beta":2.0},"support":[0,null]}"#);
    let o = run(&["classify", "--input", s(&mu)], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["is_finite"], true);
    assert_eq!(v["is_cofinite"], false);

    let o = run(&["discretize", "--input", s(&mu), "--nodes", "128"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mass: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    // everything but the mass below the default cutoff 1e-8
    assert!((mass - (0.5 - 1e-8)).abs() <= 1e-11, "{mass}");
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let mu = write(&dir, "d.json", r#"{"type":"density","kind":"indicator","params":{"a":0.0,"b":2.0},"support":[0,2]}"#);
    let a = run(&["map", "--input", s(&mu), "--nodes", "64"], &[]);
    let b = run(&["map", "--input", s(&mu), "--nodes", "64"], &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 65);
}

#[test]
fn rosenblum_reference_pipeline() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cdf.csv");
    let o = run(&["reference", "rosenblum", "--nodes", "400", "--output", s(&out)], &[]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let d: f64 = stdout.trim().strip_prefix("kolmogorov_distance ").unwrap().parse().unwrap();
    assert!(d <= 0.02);
    let table = fs::read_to_string(&out).unwrap();
    assert!(table.starts_with("lambda,empirical_cdf,reference_cdf\n"));
}

#[test]
fn lyapunov_report() {
    let dir = TempDir::new().unwrap();
    let mu = write(&dir, "mu.json", r#"{"type":"atomic","atoms":[{"x":1.0,"w":1.0},{"x":2.0,"w":1.0}]}"#);
    let o = run(&["lyapunov", "--input", s(&mu)], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["relative_residual"].as_f64().unwrap() <= 1e-13);
    assert!(v["gramian_error"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["gramian_tail_flagged"], false);
}
