use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nctorus")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn rational4(dir: &Path) -> String {
    let m = json!({ "n": 4, "mode": "rational", "upper": [
        [1, 2, "3/8"], [1, 3, "1/8"], [1, 4, "1/8"], [2, 3, "1/4"], [2, 4, "1/4"], [3, 4, "1/8"]
    ]});
    write(dir, "theta.json", &m)
}

#[test]
fn pf_prints_every_even_minor() {
    let d = TempDir::new().unwrap();
    let theta = rational4(d.path());
    let o = run(d.path(), &["pf", "--theta", &theta]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["minors"].as_array().unwrap().len(), 7);
    // 3/8·1/8 − 1/8·1/4 + 1/8·1/4
    let o = run(d.path(), &["pf", "--theta", &theta, "--index", "1,2,3,4"]);
    assert_eq!(stdout_json(&o)["minors"][0]["pf"], "3/64");
    let o = run(d.path(), &["pf", "--theta", &theta, "--index", "1,5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flow_reports_the_ratio() {
    let d = TempDir::new().unwrap();
    let theta = rational4(d.path());
    let v = stdout_json(&run(d.path(), &["flow", "--theta", &theta, "--m", "1"]));
    assert_eq!(v["iterates"].as_array().unwrap().len(), 2);
    assert_eq!(v["iterates"][1]["upper"][0][2], "1/8");
}

#[test]
fn condition_audit_exit_codes() {
    let d = TempDir::new().unwrap();
    let good = rational4(d.path());
    let o = run(d.path(), &["check-conditions", "--theta", &good]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let written: Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/conditions.json")).unwrap()).unwrap();
    assert!(written["meta"]["config_hash"].is_string());
    let bad = write(d.path(), "bad.json", &json!({ "n": 2, "mode": "rational", "upper": [[1, 2, "3"]] }));
    assert_eq!(run(d.path(), &["check-conditions", "--theta", &bad]).status.code(), Some(1));
    let missing = d.path().join("nope.json");
    assert_eq!(run(d.path(), &["check-conditions", "--theta", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn superinc_emits_both_forms() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), &["superinc", "--n", "6", "--emit", "theta.json"]);
    assert!(o.status.success());
    let exact: Value = serde_json::from_str(&fs::read_to_string(d.path().join("theta.json")).unwrap()).unwrap();
    assert_eq!(exact["mode"], "alpha");
    let float: Value = serde_json::from_str(&fs::read_to_string(d.path().join("theta.float.json")).unwrap()).unwrap();
    assert_eq!(float["mode"], "float");
    let o = run(d.path(), &["superinc", "--seq", "1,2,3", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rep_and_rieffel() {
    let d = TempDir::new().unwrap();
    let theta = write(d.path(), "t2.json", &json!({ "n": 2, "mode": "rational", "upper": [[1, 2, "3/8"]] }));
    let v = stdout_json(&run(d.path(), &["rep", "--theta", &theta, "--q", "8", "--delta", "0.001", "--seed", "3"]));
    assert_eq!(v["dim"], 64);
    assert!(v["relation_defect"].as_f64().unwrap() < 5e-3);
    let o = run(d.path(), &["rieffel", "--theta", "3/8"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert!((v["projection"]["trace"].as_f64().unwrap() - 0.375).abs() < 1e-10);
    assert!(v["table"]["entries"].is_array());
    assert_eq!(run(d.path(), &["rieffel", "--theta", "3/8", "--q", "12"]).status.code(), Some(2));
}

#[test]
fn experiment_outputs_are_reproducible() {
    let d = TempDir::new().unwrap();
    let cfg = "deltas = [0.0, 0.01]\nseeds = [0, 1]\nexel_cells = [{ p = 3, q = 8 }]\n";
    fs::write(d.path().join("cfg.toml"), cfg).unwrap();
    let args = ["--config", "cfg.toml", "--format", "csv", "exel-sweep"];
    assert!(run(d.path(), &args).status.success());
    let first = fs::read(d.path().join("out/exel_sweep.csv")).unwrap();
    assert!(run(d.path(), &args).status.success());
    assert_eq!(first, fs::read(d.path().join("out/exel_sweep.csv")).unwrap());
    let o = run(d.path(), &["--config", "cfg.toml", "stability"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/stability.json")).unwrap()).unwrap();
    assert_eq!(v["meta"]["schema"], "1");
    fs::write(d.path().join("broken.toml"), "deltas = [1.0, 0.5]\n").unwrap();
    assert_eq!(run(d.path(), &["--config", "broken.toml", "exel-sweep"]).status.code(), Some(2));
}

#[test]
fn trace_audit_control_fails_the_run() {
    let d = TempDir::new().unwrap();
    assert!(run(d.path(), &["trace-audit"]).status.success());
    fs::write(d.path().join("cfg.toml"), "audit_values = [0.123456]\n").unwrap();
    let o = run(d.path(), &["--config", "cfg.toml", "--format", "csv", "trace-audit"]);
    assert_eq!(o.status.code(), Some(1));
    let csv = fs::read_to_string(d.path().join("out/trace_audit.csv")).unwrap();
    assert!(csv.lines().last().unwrap().contains("notfound"));
}
