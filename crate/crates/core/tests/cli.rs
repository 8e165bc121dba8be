use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

const BIN: &str = env!("CARGO_BIN_EXE_mhk");

fn mhk(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ASYNC_SCENARIO: &str = r#"{
    "n": 6, "d": 1, "epsilon": 0.15, "delta": 0.01, "horizon": 400,
    "initial_opinions": { "uniform_box": { "lo": 0.0, "hi": 0.6, "seed": 21 } },
    "schedule": { "kind": "asynchronous", "seed": 8 }
}"#;

const CONSENSUS_SCENARIO: &str = r#"{
    "n": 3, "d": 2, "epsilon": 0.2, "delta": 0.01, "horizon": 10,
    "initial_opinions": { "explicit": [[0.3, 0.1], [0.3, 0.1], [0.3, 0.1]] },
    "schedule": { "kind": "synchronous" }
}"#;

const STOCHASTIC_SCENARIO: &str = r#"{
    "n": 4, "d": 1, "epsilon": 0.1, "delta": 0.01, "horizon": 3000,
    "initial_opinions": { "uniform_box": { "lo": 0.0, "hi": 0.2, "seed": 4 } },
    "schedule": {
        "kind": "stochastic_support",
        "support": [ { "agents": [0, 1], "probability": 0.5 }, { "agents": [2, 3], "probability": 0.5 } ],
        "partition_indices": [0, 1],
        "open_alpha": { "interval": { "lo": 0.0, "hi": 0.5 } },
        "seed": 3
    },
    "master_seed": 99
}"#;

#[test]
fn run_writes_reports_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.json"), ASYNC_SCENARIO).unwrap();
    let first = mhk(&["run", "s.json", "--out", "a"], dir.path());
    assert!(first.status.success(), "{}", stderr(&first));
    let second = mhk(&["run", "s.json", "--out", "b"], dir.path());
    assert!(second.status.success());
    let a = fs::read(dir.path().join("a/trajectory.jsonl")).unwrap();
    let b = fs::read(dir.path().join("b/trajectory.jsonl")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 401);
    for f in ["energy.csv", "stopping_report.json"] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/stopping_report.json")).unwrap()).unwrap();
    assert_eq!(report["steps"], 401);
}

#[test]
fn analyze_accepts_run_output_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.json"), ASYNC_SCENARIO).unwrap();
    assert!(mhk(&["run", "s.json", "--out", "o"], dir.path()).status.success());
    assert!(mhk(&["run", "s.json", "--out", "o", "--format", "csv"], dir.path()).status.success());

    let out = mhk(&["analyze", "o/trajectory.jsonl"], dir.path());
    assert!(out.status.success(), "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("mismatches: 0"));
    assert!(stdout(&out).contains("invariant violations: 0"));

    let missing_eps = mhk(&["analyze", "o/trajectory.csv"], dir.path());
    assert_eq!(missing_eps.status.code(), Some(1));
    let out = mhk(&["analyze", "o/trajectory.csv", "--epsilon", "0.15"], dir.path());
    assert!(out.status.success(), "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("invariant violations: 0"));
}

#[test]
fn analyze_flags_a_tampered_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.json"), ASYNC_SCENARIO).unwrap();
    assert!(mhk(&["run", "s.json", "--out", "o"], dir.path()).status.success());
    let path = dir.path().join("o/trajectory.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut row: serde_json::Value = serde_json::from_str(&lines[5]).unwrap();
    row["opinions"][0][0] = serde_json::json!(row["opinions"][0][0].as_f64().unwrap() + 1e-9);
    lines[5] = row.to_string();
    fs::write(&path, lines.join("\n")).unwrap();
    let out = mhk(&["analyze", "o/trajectory.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!stdout(&out).contains("mismatches: 0"));
}

#[test]
fn consensus_run_stops_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), CONSENSUS_SCENARIO).unwrap();
    let out = mhk(&["run", "c.json", "--out", "o"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("tau_delta: 0"), "{text}");
    assert!(text.contains("termination: 0"), "{text}");

    let early = mhk(&["run", "c.json", "--out", "e", "--stop-on-termination"], dir.path());
    assert!(early.status.success());
    let lines = fs::read_to_string(dir.path().join("e/trajectory.jsonl")).unwrap().lines().count();
    assert_eq!(lines, 2);
}

#[test]
fn mc_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.json"), STOCHASTIC_SCENARIO).unwrap();
    let out = mhk(&["mc", "m.json", "--runs", "16", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("reached fraction: 1"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/ensemble_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"], 16);
    assert!(summary["mean_tau"].as_f64().unwrap() <= summary["co1_bound"].as_f64().unwrap());
    let csv = fs::read_to_string(dir.path().join("o/tau_samples.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);

    fs::write(dir.path().join("c.json"), CONSENSUS_SCENARIO).unwrap();
    let sync = mhk(&["mc", "c.json", "--runs", "2"], dir.path());
    assert_eq!(sync.status.code(), Some(1));
}

#[test]
fn validation_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let overlapping = STOCHASTIC_SCENARIO.replace(r#""agents": [2, 3]"#, r#""agents": [1, 2, 3]"#);
    fs::write(dir.path().join("bad.json"), overlapping).unwrap();
    let out = mhk(&["run", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("partition not disjoint"), "{}", stderr(&out));

    let short = STOCHASTIC_SCENARIO.replace(r#""probability": 0.5 } ]"#, r#""probability": 0.4 } ]"#);
    fs::write(dir.path().join("sum.json"), short).unwrap();
    assert_eq!(mhk(&["run", "sum.json"], dir.path()).status.code(), Some(1));

    let unknown = mhk(&["frobnicate"], dir.path());
    assert_ne!(unknown.status.code(), Some(0));
    assert!(stderr(&unknown).contains("Usage"));
    assert_ne!(mhk(&["run", "x.json", "--bogus"], dir.path()).status.code(), Some(0));
    assert_eq!(mhk(&["demo", "nope"], dir.path()).status.code(), Some(1));
    assert_eq!(mhk(&["run", "missing.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn every_demo_is_quick_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["merge", "depart", "async-reduction", "no-termination"] {
        let start = Instant::now();
        let out = mhk(&["demo", name], dir.path());
        assert!(out.status.success(), "{name}: {}", stdout(&out));
        assert!(start.elapsed() < Duration::from_secs(5), "{name} too slow");
    }
    let merge = stdout(&mhk(&["demo", "merge"], dir.path()));
    assert!(merge.contains("x(0) = (0, 0.5)"));
    assert!(merge.contains("x(1) = (0.25, 0.25)"));
    assert!(merge.contains("merge at t=1"));
    let none = stdout(&mhk(&["demo", "no-termination"], dir.path()));
    assert!(none.contains("termination within horizon: none"));
}
