//! Command-line front end: `run`, `sweep`, `metrics`, `replay`, `report`.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 internal
//! invariant violation, 4 replay mismatch.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::NodeId;
use crate::metrics::efficiency::{strictly_improving, Measure};
use crate::metrics::fairness::trace_fairness;
use crate::metrics::report::{MetricEntry, MetricsReport, Source};
use crate::metrics::stats::Estimate;
use crate::metrics::{self, MetricsError, PersistenceMode, TraceProperty};
use crate::scenario::{patch, ConfigError, ScenarioConfig};
use crate::simnet::trace::{TraceError, TraceHeader};
use crate::simnet::{run, SimError, Trace};
use crate::strategies::utility::estimate_all;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

/// Metrics understood by `metrics`; the first group also works in `sweep`.
pub const TRACE_METRICS: &[&str] = &[
    "throughput",
    "message_complexity",
    "forks",
    "overturns",
    "orphans",
    "safety",
    "liveness",
    "fairness",
    "utility",
    "persistence",
];
pub const STATE_METRICS: &[&str] = &["hhi", "pivotality"];
pub const SWEEP_METRICS: &[&str] = &[
    "throughput",
    "message_complexity",
    "forks",
    "orphans",
    "safety",
    "fairness",
];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Internal(String),
    Mismatch(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Internal(_) => EXIT_INTERNAL,
            CliError::Mismatch(_) => EXIT_MISMATCH,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) | CliError::Mismatch(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Sim(s) => s.into(),
            MetricsError::Chain(_) | MetricsError::BadTrace(_) => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "presto",
    version,
    about = "Simulate consensus protocols and measure their properties"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its trace.
    Run(RunArgs),
    /// Run a scenario family along one config axis.
    Sweep(SweepArgs),
    /// Evaluate metrics on traces or resource states.
    Metrics(MetricsArgs),
    /// Re-run a trace from its header and compare byte for byte.
    Replay(ReplayArgs),
    /// Merge saved reports into one table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the scenario horizon (seconds).
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Dotted config path, e.g. `protocol.k`.
    #[arg(long)]
    pub axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub values: Vec<String>,
    /// Number of seeds per value.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long = "metric", required = true)]
    pub metrics: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Trace files.
    pub traces: Vec<PathBuf>,
    #[arg(long = "metric", required = true)]
    pub metrics: Vec<String>,
    /// JSON state file for `hhi`: `{"shares": [...]}` in percent,
    /// `{"resources": [...]}` as raw amounts, or a saved system state.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Resource kind for `hhi` on system states.
    #[arg(long, default_value = "power")]
    pub resource: String,
    /// Voting weights for `pivotality`.
    #[arg(long, value_delimiter = ',')]
    pub weights: Vec<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Liveness bound in seconds.
    #[arg(long)]
    pub bound: Option<f64>,
    /// Persistence warm-up in seconds.
    #[arg(long, default_value_t = 0.0)]
    pub warmup: f64,
    /// Persistence margin in seconds; a tenth of the horizon by default.
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub trace: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report files written by `metrics` or `sweep`.
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Entry point used by the binary. Returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    match execute(cli.command) {
        Ok(out) => {
            print!("{out}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

/// Caps the worker pool at `PRESTO_SIM_THREADS` when set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("PRESTO_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs a subcommand and returns its standard output.
pub fn execute(cmd: Command) -> Result<String, CliError> {
    match cmd {
        Command::Run(a) => cmd_run(&a).map(|s| serde_json::to_string_pretty(&s).expect("summary serializes") + "\n"),
        Command::Sweep(a) => cmd_sweep(&a).map(|r| r.to_table()),
        Command::Metrics(a) => cmd_metrics(&a).map(|r| r.to_table()),
        Command::Replay(a) => {
            cmd_replay(&a).map(|v| serde_json::to_string_pretty(&v).expect("verdict serializes") + "\n")
        }
        Command::Report(a) => cmd_report(&a),
    }
}

fn load_config(path: &Path, horizon: Option<f64>) -> Result<ScenarioConfig, CliError> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trace: PathBuf,
    pub scenario: String,
    pub scenario_digest: String,
    pub seed: u64,
    pub horizon: f64,
    pub records: usize,
    /// Records other than periodic snapshots.
    pub events: usize,
    pub blocks: usize,
    pub checksum: String,
}

pub fn cmd_run(a: &RunArgs) -> Result<RunSummary, CliError> {
    let cfg = load_config(&a.config, a.horizon)?;
    let trace = run(&cfg, cfg.horizon, a.seed)?;
    ensure_dir(&a.out)?;
    let stem = if cfg.name.is_empty() {
        "trace"
    } else {
        cfg.name.as_str()
    };
    let path = a.out.join(format!("{stem}-{}.jsonl", a.seed));
    trace.write_file(&path).map_err(|e| io_err(&path, e))?;
    Ok(RunSummary {
        trace: path,
        scenario: cfg.name.clone(),
        scenario_digest: trace.header.scenario_digest.clone(),
        seed: a.seed,
        horizon: trace.horizon(),
        records: trace.records.len(),
        events: trace
            .records
            .iter()
            .filter(|r| r.kind != crate::simnet::trace::RecordKind::Snapshot)
            .count(),
        blocks: trace.records.iter().filter(|r| r.extra.created.is_some()).count(),
        checksum: trace.checksum(),
    })
}

fn check_metric_names(names: &[String], allowed: &[&str]) -> Result<(), CliError> {
    for m in names {
        if !allowed.contains(&m.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown metric {m:?}; available: {}",
                allowed.join(", ")
            )));
        }
    }
    Ok(())
}

fn source_of(label: &str, trace: &Trace) -> Source {
    Source {
        trace: label.to_string(),
        scenario_digest: trace.header.scenario_digest.clone(),
        seed: Some(trace.seed()),
    }
}

/// Scalar value of a sweep metric on one trace.
fn scalar_metric(name: &str, trace: &Trace) -> Result<f64, CliError> {
    Ok(match name {
        "throughput" => Measure::Throughput.evaluate(trace)?,
        "message_complexity" => Measure::MessagesPerDecision.evaluate(trace)?,
        "forks" => metrics::detect_forks(trace)?.len() as f64,
        "orphans" => metrics::detect_orphans(trace)?.len() as f64,
        "safety" => {
            let rule = trace.scenario().protocol.finality_rule();
            metrics::audit_safety(trace, rule)?.violations.len() as f64
        }
        "fairness" => trace_fairness(trace)?.epsilon,
        other => return Err(CliError::Usage(format!("metric {other:?} is not a scalar"))),
    })
}

fn metric_unit(name: &str) -> &'static str {
    match name {
        "throughput" => "tx/s",
        "message_complexity" => "messages/decision",
        "fairness" => "epsilon",
        "utility" => "reward/s",
        "liveness" | "safety" => "faults",
        "hhi" => "hhi",
        "pivotality" => "coalitions",
        "persistence" => "verdict",
        _ => "count",
    }
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<MetricsReport, CliError> {
    if a.values.len() < 2 {
        return Err(CliError::Usage("a sweep needs at least two --values".into()));
    }
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    check_metric_names(&a.metrics, SWEEP_METRICS)?;
    let base = load_config(&a.config, a.horizon)?;
    let base_value = serde_json::to_value(&base).expect("config serializes");
    let mut configs = Vec::new();
    for raw in &a.values {
        let v: serde_json::Value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.clone()));
        let cfg = patch(&base_value, &a.axis, v)?;
        cfg.validate()?;
        configs.push((raw.clone(), cfg));
    }
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<(usize, u64, String, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(i, seed)| -> Result<_, CliError> {
            let cfg = &configs[i].1;
            let trace = run(cfg, cfg.horizon, seed)?;
            let vals = a
                .metrics
                .iter()
                .map(|m| scalar_metric(m, &trace))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((i, seed, trace.header.scenario_digest.clone(), vals))
        })
        .collect::<Result<_, _>>()?;
    let mut report = MetricsReport::default();
    for (mi, m) in a.metrics.iter().enumerate() {
        let mut means = Vec::new();
        for (i, (raw, _)) in configs.iter().enumerate() {
            let key = format!("{}={raw}", a.axis);
            let rows: Vec<&(usize, u64, String, Vec<f64>)> = results.iter().filter(|r| r.0 == i).collect();
            for r in &rows {
                let src = Source {
                    trace: format!("run:{}", r.1),
                    scenario_digest: r.2.clone(),
                    seed: Some(r.1),
                };
                report.push(MetricEntry::scalar(m, r.3[mi], metric_unit(m), src).keyed(key.clone()));
            }
            let xs: Vec<f64> = rows.iter().map(|r| r.3[mi]).collect();
            let e = Estimate::of(&xs);
            means.push(e.mean);
            let src = Source {
                trace: "aggregate".into(),
                scenario_digest: rows[0].2.clone(),
                seed: None,
            };
            report.push(MetricEntry::estimated(
                &format!("{m}_mean"),
                &key,
                &e,
                metric_unit(m),
                vec![src],
            ));
        }
        let polarity = match m.as_str() {
            "throughput" => Some(Measure::Throughput.polarity()),
            "message_complexity" => Some(Measure::MessagesPerDecision.polarity()),
            _ => None,
        };
        if let (Some(p), true) = (polarity, means.len() >= 3) {
            let ok = strictly_improving(&means, p, 0.01);
            let src = Source {
                trace: "aggregate".into(),
                scenario_digest: base.digest(),
                seed: None,
            };
            report.push(
                MetricEntry::scalar(&format!("{m}_scalable"), if ok { 1.0 } else { 0.0 }, "bool", src)
                    .keyed(a.axis.clone()),
            );
        }
    }
    if let Some(dir) = &a.out {
        write_report(&report, dir, "sweep")?;
    }
    Ok(report)
}

fn write_report(report: &MetricsReport, dir: &Path, stem: &str) -> Result<(), CliError> {
    ensure_dir(dir)?;
    let json = dir.join(format!("{stem}.json"));
    fs::write(&json, report.to_json()).map_err(|e| io_err(&json, e))?;
    let csv = dir.join(format!("{stem}.csv"));
    let f = fs::File::create(&csv).map_err(|e| io_err(&csv, e))?;
    report
        .write_csv(f)
        .map_err(|e| CliError::Usage(format!("{}: {e}", csv.display())))?;
    Ok(())
}

/// Contents of a `--state` file.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StateFile {
    Shares { shares: Vec<f64> },
    Resources { resources: Vec<f64> },
    System(crate::simnet::SystemState),
}

fn state_hhi(path: &Path, kind: &str) -> Result<f64, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let state: StateFile =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(match state {
        StateFile::Shares { shares } => metrics::hhi_from_shares(&shares)?,
        StateFile::Resources { resources } => {
            let total: f64 = resources.iter().sum();
            if !(total > 0.0) {
                return Err(CliError::Usage("total resource is zero".into()));
            }
            let shares: Vec<f64> = resources.iter().map(|r| 100.0 * r / total).collect();
            metrics::hhi_from_shares(&shares)?
        }
        StateFile::System(s) => metrics::hhi(&s, kind)?,
    })
}

pub fn cmd_metrics(a: &MetricsArgs) -> Result<MetricsReport, CliError> {
    let all: Vec<&str> = TRACE_METRICS.iter().chain(STATE_METRICS).copied().collect();
    check_metric_names(&a.metrics, &all)?;
    let mut report = MetricsReport::default();
    let wants_trace = a.metrics.iter().any(|m| TRACE_METRICS.contains(&m.as_str()));
    if wants_trace && a.traces.is_empty() {
        return Err(CliError::Usage("trace metrics need at least one trace file".into()));
    }
    for m in a.metrics.iter().filter(|m| STATE_METRICS.contains(&m.as_str())) {
        match m.as_str() {
            "hhi" => {
                if let Some(path) = &a.state {
                    let v = state_hhi(path, &a.resource)?;
                    let src = Source {
                        trace: path.display().to_string(),
                        scenario_digest: String::new(),
                        seed: None,
                    };
                    report.push(MetricEntry::scalar("hhi", v, "hhi", src));
                } else {
                    for path in &a.traces {
                        let trace = Trace::read_file(path)?;
                        let shares: Vec<f64> = trace
                            .scenario()
                            .consensus_fractions()
                            .iter()
                            .map(|f| 100.0 * f)
                            .collect();
                        let v = metrics::hhi_from_shares(&shares)?;
                        report.push(MetricEntry::scalar(
                            "hhi",
                            v,
                            "hhi",
                            source_of(&path.display().to_string(), &trace),
                        ));
                    }
                    if a.traces.is_empty() {
                        return Err(CliError::Usage("hhi needs --state or a trace".into()));
                    }
                }
            }
            "pivotality" => {
                let threshold = a
                    .threshold
                    .ok_or_else(|| CliError::Usage("pivotality needs --threshold".into()))?;
                if a.weights.is_empty() {
                    return Err(CliError::Usage("pivotality needs --weights".into()));
                }
                let counts = metrics::pivotality(&a.weights, threshold)?;
                for (i, c) in counts.iter().enumerate() {
                    let src = Source {
                        trace: "weights".into(),
                        scenario_digest: String::new(),
                        seed: None,
                    };
                    report.push(MetricEntry::scalar("pivotality", *c as f64, "coalitions", src).keyed(i.to_string()));
                }
            }
            _ => unreachable!("checked above"),
        }
    }
    if wants_trace {
        for path in &a.traces {
            let trace = Trace::read_file(path)?;
            let label = path.display().to_string();
            for m in a.metrics.iter().filter(|m| TRACE_METRICS.contains(&m.as_str())) {
                trace_metric(m, &trace, &label, a, &mut report)?;
            }
        }
    }
    if let Some(dir) = &a.out {
        write_report(&report, dir, "metrics")?;
    }
    Ok(report)
}

fn detail<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("metric serializes")
}

fn trace_metric(
    m: &str,
    trace: &Trace,
    label: &str,
    a: &MetricsArgs,
    report: &mut MetricsReport,
) -> Result<(), CliError> {
    let src = || source_of(label, trace);
    let unit = metric_unit(m);
    match m {
        "throughput" | "orphans" | "safety" | "fairness" => {
            let v = scalar_metric(m, trace)?;
            let extra = match m {
                "orphans" => Some(detail(&metrics::detect_orphans(trace)?)),
                "safety" => Some(detail(&metrics::audit_safety(
                    trace,
                    trace.scenario().protocol.finality_rule(),
                )?)),
                "fairness" => Some(detail(&trace_fairness(trace)?)),
                _ => None,
            };
            let mut e = MetricEntry::scalar(m, v, unit, src());
            e.detail = extra;
            report.push(e);
        }
        "message_complexity" => {
            let mc = metrics::message_complexity(trace)?;
            report.push(MetricEntry::scalar(m, mc.per_decision, unit, src()).with_detail(detail(&mc)));
        }
        "forks" => {
            let f = metrics::detect_forks(trace)?;
            report.push(MetricEntry::scalar(m, f.len() as f64, unit, src()).with_detail(detail(&f)));
        }
        "overturns" => {
            let o = metrics::detect_overturns(trace)?;
            report.push(MetricEntry::scalar(m, o.len() as f64, unit, src()).with_detail(detail(&o)));
        }
        "liveness" => {
            let bound = a.bound.unwrap_or_else(|| default_bound(trace));
            let l = metrics::audit_liveness(trace, bound)?;
            let v = (l.faults.len() + l.stalls.len()) as f64;
            report.push(MetricEntry::scalar(m, v, unit, src()).with_detail(detail(&l)));
        }
        "utility" => {
            let vs = estimate_all(trace, &trace.scenario().utility)?;
            for (i, v) in vs.iter().enumerate() {
                report.push(MetricEntry::scalar(m, *v, unit, src()).keyed(NodeId(i as u32).to_string()));
            }
        }
        "persistence" => {
            let margin = a.margin.unwrap_or(trace.horizon() / 10.0);
            let prop = TraceProperty::consistent_heads();
            for mode in [PersistenceMode::Weak, PersistenceMode::Strong] {
                let v = metrics::persistence_check(trace, &prop, a.warmup, margin, mode)?;
                let key = format!("{}:{}", prop.name, detail(&mode).as_str().unwrap_or_default());
                let code = match v {
                    metrics::Verdict::Holds => 1.0,
                    metrics::Verdict::Falsified => 0.0,
                    metrics::Verdict::Inconclusive => f64::NAN,
                };
                report.push(
                    MetricEntry::scalar(m, code, unit, src())
                        .keyed(key)
                        .with_detail(detail(&v)),
                );
            }
        }
        other => return Err(CliError::Usage(format!("unknown metric {other:?}"))),
    }
    Ok(())
}

/// Ten expected finality delays for Nakamoto, three round timeouts for IBFT.
fn default_bound(trace: &Trace) -> f64 {
    match &trace.scenario().protocol {
        crate::scenario::ProtocolConfig::Nakamoto(p) => 10.0 * p.mean_block_interval * (p.confirmations as f64 + 1.0),
        crate::scenario::ProtocolConfig::Ibft(p) => 3.0 * p.round_timeout,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayVerdict {
    pub trace: PathBuf,
    pub ok: bool,
    pub expected: String,
    pub actual: String,
    /// First differing line (1-based), if any.
    pub first_difference: Option<usize>,
}

pub fn cmd_replay(a: &ReplayArgs) -> Result<ReplayVerdict, CliError> {
    let text = fs::read_to_string(&a.trace).map_err(|e| io_err(&a.trace, e))?;
    let first = text
        .lines()
        .next()
        .ok_or_else(|| CliError::Usage("empty trace file".into()))?;
    let header: TraceHeader = serde_json::from_str(first).map_err(|e| CliError::Usage(format!("trace header: {e}")))?;
    if header.schema != crate::simnet::trace::TRACE_SCHEMA {
        return Err(CliError::Usage(format!("unsupported trace schema {:?}", header.schema)));
    }
    let cfg = &header.scenario;
    let trace = run(cfg, cfg.horizon, header.seed)?;
    let mut regenerated = Vec::new();
    trace
        .write_jsonl(&mut regenerated)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let regenerated = String::from_utf8(regenerated).expect("traces are UTF-8");
    let first_difference = text
        .lines()
        .zip(regenerated.lines())
        .position(|(x, y)| x != y)
        .map(|i| i + 1)
        .or_else(|| {
            let (n, m) = (text.lines().count(), regenerated.lines().count());
            (n != m).then_some(n.min(m) + 1)
        });
    let verdict = ReplayVerdict {
        trace: a.trace.clone(),
        ok: text == regenerated,
        expected: trace.checksum(),
        actual: crate::simnet::trace::file_checksum(&a.trace).map_err(|e| io_err(&a.trace, e))?,
        first_difference,
    };
    if !verdict.ok {
        return Err(CliError::Mismatch(format!(
            "replay mismatch for {} at line {}: expected {}, found {}",
            a.trace.display(),
            verdict.first_difference.map_or("?".into(), |l| l.to_string()),
            verdict.expected,
            verdict.actual
        )));
    }
    Ok(verdict)
}

pub fn cmd_report(a: &ReportArgs) -> Result<String, CliError> {
    if a.inputs.is_empty() {
        return Err(CliError::Usage("report needs at least one input".into()));
    }
    let mut merged = MetricsReport::default();
    for path in &a.inputs {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let r = MetricsReport::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        merged.entries.extend(r.entries);
    }
    let out = match a.format {
        Format::Table => merged.to_table(),
        Format::Json => merged.to_json() + "\n",
        Format::Csv => {
            let mut buf = Vec::new();
            merged
                .write_csv(&mut buf)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            String::from_utf8(buf).expect("csv is UTF-8")
        }
    };
    if let Some(path) = &a.out {
        fs::write(path, &out).map_err(|e| io_err(path, e))?;
    }
    Ok(out)
}
