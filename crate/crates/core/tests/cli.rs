//! End-to-end checks of the freebrown binary: flag plumbing, output formats,
//! exit codes, and reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_freebrown"))
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_measure(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn transform_s_rows() {
    let dir = tempfile::tempdir().unwrap();
    // (delta_1 + delta_4)/2: S(-1/2) = 1/2 from the quadratic chi equation
    let m = write_measure(
        dir.path(),
        "two.json",
        r#"{"atoms":[{"x":1.0,"w":0.5},{"x":4.0,"w":0.5}]}"#,
    );
    let out = bin()
        .args(["transform", "--measure", &m, "--which", "s", "--at", "-0.5", "--at", "-0.9"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "w,value");
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(row[0], -0.5);
    assert!((row[1] - 0.5).abs() < 1e-10);
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn compress_row_at_half() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_measure(dir.path(), "haar.json", r#"{"atoms":[{"x":1.0,"w":1.0}]}"#);
    let csv = dir.path().join("out.csv");
    let out = bin()
        .args([
            "compress",
            "--measure",
            &m,
            "--s",
            "2",
            "--scaling",
            "sqrt-s",
            "--out",
            csv.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# {"), "RunConfig comment missing");
    let row = text
        .lines()
        .find(|l| l.starts_with("0.5000000000"))
        .expect("no row at t = 0.5");
    assert!(row.split(',').nth(1).unwrap().starts_with("0.81649658"), "{row}");
    // sidecar
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(side["delta_s"], 0.0);
    assert!(side["gap_to_disk"].as_f64().unwrap() < 0.14);
    assert!(side["run_config"]["version"].as_str().unwrap().starts_with("freebrown"));
}

#[test]
fn stable_moment_json() {
    let out = bin()
        .args(["stable", "--beta", "1", "--moments", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(text.contains("1.5707963"), "{text}");
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["beta"], 1.0);
}

#[test]
fn stable_infinite_moment_flag() {
    let out = bin()
        .args(["stable", "--beta", "1", "--moments", "1,2", "--nu-moments", "0.25"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["abs_moments"]["2"], "+inf");
    assert!((v["nu_moments"]["0.25"].as_f64().unwrap() - 2.0_f64.sqrt()).abs() < 1e-12);
}

#[test]
fn rmt_smoke_and_determinism() {
    let args = [
        "rmt", "product", "--k", "1", "--n", "48", "--trials", "2", "--seed", "7",
    ];
    let a = bin().args(args).output().unwrap();
    assert!(a.status.success());
    let b = bin().args(args).output().unwrap();
    // identical up to the wall-clock field
    let mut va: serde_json::Value = serde_json::from_str(&stdout_str(&a)).unwrap();
    let mut vb: serde_json::Value = serde_json::from_str(&stdout_str(&b)).unwrap();
    va.as_object_mut().unwrap().remove("wall_time_s");
    vb.as_object_mut().unwrap().remove("wall_time_s");
    assert_eq!(va, vb, "same invocation + seed must reproduce the report");
    let v = va;
    let ks = v["ks"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&ks));
    assert_eq!(v["radii_quantiles"].as_array().unwrap().len(), 101);
}

#[test]
fn rmt_seed_env_fallback() {
    let flag = bin()
        .args(["rmt", "ginibre", "--n", "32", "--trials", "1", "--seed", "123"])
        .output()
        .unwrap();
    let env = bin()
        .args(["rmt", "ginibre", "--n", "32", "--trials", "1"])
        .env("FREEBROWN_SEED", "123")
        .output()
        .unwrap();
    assert!(flag.status.success() && env.status.success());
    let a: serde_json::Value = serde_json::from_str(&stdout_str(&flag)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout_str(&env)).unwrap();
    assert_eq!(a["spec"], b["spec"]);
    assert_eq!(a["radii_quantiles"], b["radii_quantiles"]);
}

#[test]
fn verify_quick_exits_zero() {
    let out = bin().args(["verify", "--quick"]).output().unwrap();
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn bad_measure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_measure(dir.path(), "bad.json", r#"{"atoms":[{"x":-1.0,"w":1.0}]}"#);
    let out = bin()
        .args(["transform", "--measure", &m, "--which", "s", "--at", "-0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());

    let missing = bin()
        .args(["transform", "--measure", "/nonexistent.json", "--which", "s", "--at", "-0.5"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn invalid_s_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_measure(dir.path(), "haar.json", r#"{"atoms":[{"x":1.0,"w":1.0}]}"#);
    let csv = dir.path().join("out.csv");
    let out = bin()
        .args(["compress", "--measure", &m, "--s", "0.5", "--out", csv.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_domain_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_measure(dir.path(), "haar.json", r#"{"atoms":[{"x":1.0,"w":1.0}]}"#);
    let out = bin()
        .args(["transform", "--measure", &m, "--which", "chi", "--at", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn version_prints_identity() {
    let out = bin().arg("--version").output().unwrap();
    assert!(out.status.success());
    assert!(stdout_str(&out).contains("freebrown"));
}
