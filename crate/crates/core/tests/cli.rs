use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use presto_sim::metrics::report::MetricsReport;
use presto_sim::Trace;
use serde_json::Value;

fn presto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_presto"))
        .args(args)
        .env("PRESTO_SIM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
        .display()
        .to_string()
}

fn stdout_json(o: &Output) -> Value {
    assert_eq!(
        o.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn report(dir: &Path) -> MetricsReport {
    MetricsReport::from_json(&std::fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap()
}

fn golden(dir: &Path) -> PathBuf {
    let d = dir.display().to_string();
    let s = stdout_json(&presto(&["run", "--config", &scenario("fork_window"), "--out", &d]));
    PathBuf::from(s["trace"].as_str().unwrap())
}

#[test]
fn zero_horizon_run_has_no_events() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let s = stdout_json(&presto(&[
        "run",
        "--config",
        &scenario("two_miners"),
        "--horizon",
        "0",
        "--out",
        &d,
    ]));
    assert_eq!(s["events"], 0);
    assert_eq!(s["blocks"], 0);
}

#[test]
fn golden_run_reports_the_fork() {
    let dir = tempfile::tempdir().unwrap();
    let trace = golden(dir.path());
    let d = dir.path().display().to_string();
    let t = trace.display().to_string();
    let o = presto(&["metrics", &t, "--metric", "forks", "--metric", "overturns", "--out", &d]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path());
    let forks: Vec<_> = r.get("forks").collect();
    assert_eq!(forks.len(), 1);
    let detail = forks[0].detail.as_ref().unwrap().to_string();
    assert!(detail.contains("241") && detail.contains("710"), "{detail}");
    assert!(r
        .entries
        .iter()
        .all(|e| !e.sources.is_empty() && !e.sources[0].scenario_digest.is_empty()));
}

#[test]
fn same_seed_same_checksum() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = scenario("double_spend");
    let run = |d: &Path| {
        stdout_json(&presto(&[
            "run",
            "--config",
            &cfg,
            "--seed",
            "4",
            "--out",
            &d.display().to_string(),
        ]))
    };
    let (x, y) = (run(a.path()), run(b.path()));
    assert_eq!(x["checksum"], y["checksum"]);
    let ta = std::fs::read(x["trace"].as_str().unwrap()).unwrap();
    let tb = std::fs::read(y["trace"].as_str().unwrap()).unwrap();
    assert_eq!(ta, tb);
}

#[test]
fn sweep_needs_two_values() {
    let o = presto(&[
        "sweep",
        "--config",
        &scenario("ibft_honest"),
        "--axis",
        "protocol.k",
        "--values",
        "4",
        "--metric",
        "throughput",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_rows_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let o = presto(&[
        "sweep",
        "--config",
        &scenario("ibft_honest"),
        "--axis",
        "protocol.k",
        "--values",
        "4,7,10",
        "--horizon",
        "60",
        "--metric",
        "message_complexity",
        "--out",
        &d,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "metric,key,value,unit,std_err,trace,scenario_digest,seed"
    );
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert!(!cols[6].is_empty(), "row without digest: {line}");
    }
    assert!(csv.contains("protocol.k=4"));
}

#[test]
fn hhi_from_a_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("btc.json");
    std::fs::write(
        &state,
        r#"{"shares": [20.1, 14.5, 13.1, 8.8, 8.8, 8.3, 6.1, 4.9, 1.7, 1.4]}"#,
    )
    .unwrap();
    let d = dir.path().display().to_string();
    let o = presto(&[
        "metrics",
        "--metric",
        "hhi",
        "--state",
        &state.display().to_string(),
        "--out",
        &d,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = report(dir.path()).get("hhi").next().unwrap().value;
    assert!((v - 1075.7).abs() <= 0.1, "{v}");
}

#[test]
fn pivotality_of_the_paradox() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let o = presto(&[
        "metrics",
        "--metric",
        "pivotality",
        "--weights",
        "0.45,0.40,0.15",
        "--threshold",
        "0.51",
        "--out",
        &d,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let values: Vec<f64> = report(dir.path()).get("pivotality").map(|e| e.value).collect();
    assert_eq!(values, vec![2.0, 2.0, 2.0]);
}

#[test]
fn unknown_metric_is_a_usage_error() {
    let o = presto(&["metrics", "--metric", "vibes", "--weights", "1,1", "--threshold", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = presto(&["run", "--config", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replay_detects_edits() {
    let dir = tempfile::tempdir().unwrap();
    let trace = golden(dir.path());
    let t = trace.display().to_string();
    let v = stdout_json(&presto(&["replay", &t]));
    assert_eq!(v["ok"], true);

    // the file is still a valid trace, just not the one the header produces
    let text = std::fs::read_to_string(&trace).unwrap();
    let edited = text.replacen("\"t\":241.0", "\"t\":241.5", 1);
    assert_ne!(edited, text);
    std::fs::write(&trace, edited).unwrap();
    assert!(Trace::read_file(&trace).is_ok());
    let o = presto(&["replay", &t]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn report_merges_saved_reports() {
    let dir = tempfile::tempdir().unwrap();
    let trace = golden(dir.path());
    let d = dir.path().display().to_string();
    let t = trace.display().to_string();
    assert_eq!(
        presto(&["metrics", &t, "--metric", "throughput", "--out", &d])
            .status
            .code(),
        Some(0)
    );
    let m = dir.path().join("metrics.json").display().to_string();
    let o = presto(&["report", &m, &m, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().filter(|l| l.starts_with("throughput,")).count(), 2);
}
