use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn warmstart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warmstart"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

const SMALL_BOX: &str = r#"{
  "n": 2,
  "R": 3,
  "nodes": [
    {"id": "N"},
    {"id": "a", "parent": "N", "elements": [0], "l": 0, "u": 2,
     "objective": {"kind": "quadratic", "a": 1.0}},
    {"id": "b", "parent": "N", "elements": [1], "l": 0, "u": 2,
     "objective": {"kind": "quadratic", "a": 1.0, "b": -2.0}}
  ]
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn project_moves_prediction_into_the_box() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "box.json", SMALL_BOX);
    let pred = write(dir.path(), "pred.json", r#"{"x_hat": [3.0, 0.0]}"#);
    let v = stdout_json(&warmstart(&["project", "--instance", &inst, "--prediction", &pred]));
    assert_eq!(v["x0"], serde_json::json!([2, 1]));
    assert_eq!(v["l1_to_rounded"], 2);
}

#[test]
fn oracles_and_engines_agree() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "box.json", SMALL_BOX);
    let pred = write(dir.path(), "pred.json", r#"{"x_hat": [2.0, 1.0]}"#);
    let mut answers = Vec::new();
    for extra in [&["--oracle", "dp"][..], &["--oracle", "heap"], &["--engine", "general"]] {
        let mut args = vec!["solve", "--instance", &inst, "--prediction", &pred];
        args.extend_from_slice(extra);
        answers.push(stdout_json(&warmstart(&args)));
    }
    // x^2 + (y^2 - 2y) over x + y = 3 is minimized at (1, 2)
    for v in &answers {
        assert_eq!(v["x_star"], serde_json::json!([1, 2]));
        assert_eq!(v["objective"], 1.0);
        assert_eq!(v["iterations"], 1);
    }
}

#[test]
fn trace_lists_the_exchanges() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "box.json", SMALL_BOX);
    let pred = write(dir.path(), "pred.json", r#"{"x_hat": [2.0, 1.0]}"#);
    let trace = dir.path().join("trace.json");
    let v = stdout_json(&warmstart(&[
        "solve",
        "--instance",
        &inst,
        "--prediction",
        &pred,
        "--trace",
        trace.to_str().unwrap(),
    ]));
    let steps: Value = serde_json::from_str(&fs::read_to_string(trace).unwrap()).unwrap();
    assert_eq!(steps.as_array().unwrap().len() as u64, v["iterations"].as_u64().unwrap());
    assert_eq!(steps[0]["from"], 0);
    assert_eq!(steps[0]["to"], 1);
}

#[test]
fn heap_oracle_rejects_nested_instances() {
    let dir = TempDir::new().unwrap();
    let nested = r#"{"n": 3, "R": 3, "nodes": [
        {"id": "N"},
        {"id": "Y", "parent": "N", "l": 0, "u": 1, "objective": {"kind": "quadratic", "a": 1.0}},
        {"id": "a", "parent": "Y", "elements": [0], "l": 0, "u": 3},
        {"id": "b", "parent": "Y", "elements": [1], "l": 0, "u": 3},
        {"id": "c", "parent": "N", "elements": [2], "l": 0, "u": 3}
    ]}"#;
    let inst = write(dir.path(), "nested.json", nested);
    let out = warmstart(&["solve", "--instance", &inst, "--oracle", "heap"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let v = stdout_json(&warmstart(&["solve", "--instance", &inst]));
    assert_eq!(v["x_star"].as_array().unwrap().len(), 3);
}

#[test]
fn malformed_instances_are_reported() {
    let dir = TempDir::new().unwrap();
    let bad = r#"{"n": 2, "R": 3, "nodes": [
        {"id": "N"},
        {"id": "a", "parent": "N", "elements": [0]},
        {"id": "a", "parent": "N", "elements": [1]}
    ]}"#;
    let inst = write(dir.path(), "bad.json", bad);
    let out = warmstart(&["solve", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`a`"));
}

#[test]
fn verify_reports_pass() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "box.json", SMALL_BOX);
    let out = warmstart(&["verify", "--instance", &inst]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{text}");
}

#[test]
fn gen_then_learn() {
    let dir = TempDir::new().unwrap();
    let inst_dir = dir.path().join("inst");
    let out = warmstart(&[
        "gen", "--n", "8", "--R", "64", "--sigma", "2", "--T", "4", "--seed", "3", "--out",
        inst_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = inst_dir.join("instance_001.json");
    // a stored solution is used instead of solving
    let solved = stdout_json(&warmstart(&["solve", "--instance", first.to_str().unwrap()]));
    fs::write(inst_dir.join("instance_001.solution.json"), solved.to_string()).unwrap();

    let log = dir.path().join("learn.jsonl");
    let out = warmstart(&["learn", "--instances", inst_dir.to_str().unwrap(), "--out", log.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<Value> = fs::read_to_string(&log)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0]["t"], 1);
    assert_eq!(lines[0]["prediction"], serde_json::json!(vec![8.0; 8]));
    let x_star: Vec<f64> = solved["x_star"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let loss: f64 = x_star.iter().map(|v| (v - 8.0).abs()).sum();
    assert!((lines[0]["l1_loss"].as_f64().unwrap() - loss).abs() < 1e-9);
}

#[test]
fn bench_writes_deterministic_csv() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let csv = dir.path().join(name);
        let plot = dir.path().join(format!("{name}.plot.json"));
        let out = warmstart(&[
            "bench", "--n", "8", "--R", "64", "--sigmas", "1,20", "--T", "6", "--runs", "3", "--seed", "11",
            "--out", csv.to_str().unwrap(), "--plot-data", plot.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read_to_string(csv).unwrap(), fs::read_to_string(plot).unwrap())
    };
    let (a, plot) = run("a.csv");
    let (b, _) = run("b.csv");
    assert_eq!(a, b);
    let mut lines = a.lines();
    assert_eq!(
        lines.next(),
        Some("sigma,run,t,iterations_learn,iterations_cold,l1_loss,objective")
    );
    assert_eq!(lines.count(), 2 * 3 * 6);
    let series: Value = serde_json::from_str(&plot).unwrap();
    assert_eq!(series.as_array().unwrap().len(), 2);
    assert_eq!(series[0]["learn_mean"].as_array().unwrap().len(), 6);
}
