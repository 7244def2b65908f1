use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const GAUSS: &str = r#"{"family":"gaussian","params":{"delta":1,"sigma2":1}}"#;
const BERN: &str = r#"{"family":"bernoulli","params":{"alpha":0.3333}}"#;

fn rrw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrw")).args(args).env_remove("RRW_SEED").output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim_end().lines().count(), 1, "stderr: {text}");
    serde_json::from_str(text.trim()).unwrap()
}

fn manifest_hash(path: &Path) -> String {
    let m: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    m["manifest_hash"].as_str().unwrap().to_string()
}

#[test]
fn path_csv_to_stdout() {
    let out = rrw(&["path", GAUSS, "--z", "0.3333", "--samples", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,psi"));
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    // terminal branch: endpoint 3/2 (z - 1/6) > 0
    assert_eq!(last[0], 1.0);
    assert!((last[1] - 1.5 * (0.3333 - 1.0 / 6.0)).abs() < 1e-10);
}

#[test]
fn path_json_file_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("p.json");
    let out = rrw(&["path", GAUSS, "--z", "0.1", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["regime"], "interior");
    let body: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let manifest = dir.path().join("p.manifest.json");
    let hash = manifest_hash(&manifest);
    assert_eq!(body["manifest_hash"], hash.as_str());
    assert_eq!(body["samples"].as_array().unwrap().len(), 201);
    let m: Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["command"], "path");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 1);
}

#[test]
fn bernoulli_lambda_is_reported() {
    let out = rrw(&["path", BERN, "--z", "0.45", "--format", "json", "--samples", "3"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert!(v["lambda_star"].as_f64().unwrap() > 0.0);
}

#[test]
fn zero_target_gives_zero_path() {
    let out = rrw(&["path", GAUSS, "--z", "0", "--samples", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "t,psi\n0,0\n0.5,0\n1,0\n");
}

#[test]
fn infeasible_target_exits_two() {
    let out = rrw(&["path", BERN, "--z", "0.6"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "infeasible");
}

#[test]
fn config_errors_exit_one_with_one_json_line() {
    for args in [
        vec!["path", "{\"family\":\"gaussian\"}", "--z", "1"],
        vec!["path", "not-a-file.json", "--z", "1"],
        vec!["path", GAUSS, "--z", "-1"],
        vec!["path", GAUSS],
        vec!["verify", GAUSS, "--z", "0.1", "--grid", "10,10"],
    ] {
        let out = rrw(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(stderr_json(&out)["error"], "config");
    }
}

#[test]
fn model_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    fs::write(&path, GAUSS).unwrap();
    let out = rrw(&["path", path.to_str().unwrap(), "--z", "0.2", "--format", "json", "--samples", "2"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["branch"], "terminal");
}

#[test]
fn rate_curve_reports_the_gaussian_transition() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let out = rrw(&["rate-curve", GAUSS, "--z-max", "0.5", "--points", "26", "--out", curve.to_str().unwrap()]);
    assert!(out.status.success());
    let summary = stdout_json(&out);
    let t = &summary["transitions"][0];
    assert!((t["z"].as_f64().unwrap() - 1.0 / 6.0).abs() <= 1e-4);
    let text = fs::read_to_string(&curve).unwrap();
    assert!(text.starts_with("z,rate,regime,t0,t00,t1,jump,lambda_star,endpoint\n"));
    let hash = manifest_hash(&dir.path().join("curve.manifest.json"));
    assert!(text.ends_with(&format!("# manifest_hash={hash}\n")));
    let tr: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("curve.transitions.json")).unwrap()).unwrap();
    assert_eq!(tr["manifest_hash"], hash.as_str());
}

#[test]
fn bernoulli_curve_is_infinite_past_one_half() {
    let out = rrw(&["rate-curve", BERN, "--z-min", "0.4", "--z-max", "0.6", "--points", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("0.6,inf,"), "{last}");
}

fn simulate(dir: &Path, workers: &str, seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rrw"));
    cmd.args([
        "--workers",
        workers,
        "simulate",
        r#"{"family":"bernoulli","params":{"alpha":0.3}}"#,
        "--n",
        "40",
        "--reps",
        "20000",
        "--seed",
        "5",
        "--thresholds",
        "0.1,0.75",
        "--keep-extreme",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    cmd.env_remove("RRW_SEED");
    if let Some(s) = seed_env {
        cmd.env("RRW_SEED", s);
    }
    cmd.output().unwrap()
}

#[test]
fn simulate_is_byte_identical_across_workers() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(simulate(a.path(), "1", None).status.success());
    assert!(simulate(b.path(), "4", None).status.success());
    for f in ["outcome.json", "tail_report.csv", "extreme_path.csv"] {
        let (x, y) = (fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        assert_eq!(x, y, "{f} differs");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    for entry in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(entry["path"].as_str().unwrap()).exists());
    }
    let tail = fs::read_to_string(a.path().join("tail_report.csv")).unwrap();
    assert!(tail.starts_with("n,r,side,count,R,log_freq_over_n,lo,hi\n"));
    assert_eq!(tail.lines().count(), 1 + 4 + 1);
    let extreme = fs::read_to_string(a.path().join("extreme_path.csv")).unwrap();
    assert!(extreme.starts_with("k,W_k\n0,0\n"));
    assert_eq!(extreme.lines().count(), 1 + 41 + 1);
}

#[test]
fn seed_environment_overrides_flag() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(simulate(a.path(), "2", Some("77")).status.success());
    assert!(simulate(b.path(), "2", None).status.success());
    let ma: Value = serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(ma["seed"], 77);
    assert_ne!(fs::read(a.path().join("outcome.json")).unwrap(), fs::read(b.path().join("outcome.json")).unwrap());
    let bad = simulate(b.path(), "2", Some("seven"));
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn verify_reports_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("dp.json");
    let out = rrw(&["verify", GAUSS, "--z", "0.1667", "--grid", "60,60,120", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    let gap = report["rel_gap"].as_f64().unwrap();
    assert!(gap > -0.005 && gap < 0.05, "gap {gap}");
    let body: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(body["method"], "dp");
}
