use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noise-id"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const EXPLICIT: &str = r#"{
  "K": 2,
  "prior": [0.4, 0.6],
  "T": [[0.8, 0.2], [0.3, 0.7]],
  "noise_model": {"type": "explicit"},
  "n": 2000,
  "p": 3
}"#;

#[test]
fn check_instance3_identifiable() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "s.json", EXPLICIT);
    let o = run(&["--no-timestamp", "check", s(&f), "--mode", "instance3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict: identifiable"));
    assert!(!stdout(&o).contains("timestamp"));
}

#[test]
fn kruskal_with_two_labels_is_not_guaranteed() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "s.json", &EXPLICIT.replace("\"p\": 3", "\"p\": 2"));
    let o = run(&["--json", "--no-timestamp", "check", s(&f), "--mode", "kruskal"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "not_guaranteed");
    assert!(v["lhs"].as_i64().unwrap() < v["rhs"].as_i64().unwrap());
}

#[test]
fn timestamp_present_by_default() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "s.json", EXPLICIT);
    let o = run(&["check", s(&f), "--mode", "instance3"]);
    assert!(stdout(&o).starts_with("# timestamp: "));
    let o = run(&["--json", "check", s(&f), "--mode", "instance3"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["timestamp"].is_u64());
}

#[test]
fn parse_error_points_at_line() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "bad.json", "{\n  \"K\": 2,\n  \"prior\": [0.5, 0.5,\n}\n");
    let o = run(&["check", s(&f), "--mode", "instance3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.json:4:"), "{err}");
}

#[test]
fn invalid_scenario_exits_2() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "s.json", &EXPLICIT.replace("[0.4, 0.6]", "[0.4, 0.4]"));
    assert_eq!(run(&["check", s(&f), "--mode", "instance3"]).status.code(), Some(2));
    let missing = d.path().join("nope.csv");
    assert_eq!(run(&["estimate", s(&missing)]).status.code(), Some(2));
}

#[test]
fn strict_requires_seed() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "s.json", EXPLICIT);
    let o = run(&["--strict", "check", s(&f), "--mode", "instance3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
    let o = run(&["--strict", "--seed", "1", "check", s(&f), "--mode", "instance3"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn exact_estimate_recovers_truth() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "s.json", EXPLICIT);
    let o = run(&["--json", "--no-timestamp", "--seed", "3", "estimate", s(&f), "--exact"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["err"].as_f64().unwrap() < 1e-6, "{v}");
}

#[test]
fn two_label_dataset_exits_3() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "s.json", &EXPLICIT.replace("\"p\": 3", "\"p\": 2"));
    let out = d.path().join("data.csv");
    let o = run(&["--seed", "1", "generate", s(&f), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["--seed", "1", "estimate", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("three"), "{}", stderr(&o));
}

#[test]
fn generate_and_estimate_are_reproducible() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "s.json", EXPLICIT);
    let a = d.path().join("a.csv");
    let b = d.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&["--seed", "9", "generate", s(&f), "-o", s(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let truth = write(d.path(), "t.json", "[[0.8, 0.2], [0.3, 0.7]]");
    let args = ["--no-timestamp", "--seed", "4", "estimate", s(&a), "--truth", s(&truth)];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(first.stdout, run(&args).stdout);
    assert!(stdout(&first).contains("err: "));
}

#[test]
fn instance_rows_are_emitted() {
    let d = TempDir::new().unwrap();
    let f = write(
        d.path(),
        "s.json",
        r#"{"K": 3, "prior": [0.3, 0.3, 0.4], "noise_model": {"type": "instance", "eps": 0.2, "S": 4}, "n": 50}"#,
    );
    let out = d.path().join("inst.csv");
    let o = run(&["--seed", "2", "generate", s(&f), "-o", s(&out), "--emit-rows"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = fs::read_to_string(d.path().join("inst.rows.csv")).unwrap();
    let mut lines = rows.lines();
    assert_eq!(lines.next(), Some("n,y,q,p_1,p_2,p_3"));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 50);
    for l in body {
        let cells: Vec<f64> = l.split(',').skip(3).map(|c| c.parse().unwrap()).collect();
        assert!((cells.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    // Only the instance model supports per-row output.
    let g = write(d.path(), "g.json", EXPLICIT);
    let o = run(&["generate", s(&g), "-o", s(&out), "--emit-rows"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn witness_found_and_exhausted() {
    let o = run(&["--json", "--no-timestamp", "--seed", "0", "witness", "0.7", "0.2", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["--seed", "0", "witness", "1", "0", "0"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn simulate_2nn_warns_below_threshold() {
    let d = TempDir::new().unwrap();
    let f = write(
        d.path(),
        "p.json",
        r#"{"lambda": [0.2, 0.3, 0.5], "N": 3, "epsilon_close": 1.5, "K": 2}"#,
    );
    let o = run(&["--no-timestamp", "--seed", "1", "simulate-2nn", s(&f), "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("clears threshold: false"));
    assert!(text.contains("warning: N = 3"));
}

#[test]
fn bound_holds_for_fixed_matrices() {
    let d = TempDir::new().unwrap();
    let a = write(d.path(), "a.json", "[[0.9, 0.1], [0.2, 0.8]]");
    let b = write(d.path(), "b.json", r#"{"T": [[0.6, 0.4], [0.3, 0.7]]}"#);
    let c = write(d.path(), "c.json", "[[0.75, 0.25], [0.25, 0.75]]");
    let o = run(&["--json", "--no-timestamp", "bound", s(&a), s(&b), s(&c)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["holds"], true);
    assert!(v["lhs"].as_f64().unwrap() >= v["rhs"].as_f64().unwrap());
}
