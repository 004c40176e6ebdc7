//! Metric reports with provenance, as JSON and CSV.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::Estimate;

pub const REPORT_SCHEMA: &str = "presto-report/1";

/// Where a value came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    /// Trace file or run label.
    pub trace: String,
    pub scenario_digest: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub metric: String,
    /// Sub-key such as a node id or sweep value; empty for scalars.
    #[serde(default)]
    pub key: String,
    #[serde(with = "real")]
    pub value: f64,
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_err: Option<f64>,
    pub sources: Vec<Source>,
    /// Structured detail (fork list, verdicts and so on).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl MetricEntry {
    pub fn scalar(metric: &str, value: f64, unit: &str, source: Source) -> Self {
        MetricEntry {
            metric: metric.to_string(),
            key: String::new(),
            value,
            unit: unit.to_string(),
            std_err: None,
            sources: vec![source],
            detail: None,
        }
    }

    pub fn keyed(mut self, key: impl Into<String>) -> Self {
        self.key = key.into();
        self
    }

    pub fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn estimated(metric: &str, key: &str, e: &Estimate, unit: &str, sources: Vec<Source>) -> Self {
        MetricEntry {
            metric: metric.to_string(),
            key: key.to_string(),
            value: e.mean,
            unit: unit.to_string(),
            std_err: Some(e.std_err),
            sources,
            detail: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema: String,
    pub entries: Vec<MetricEntry>,
}

impl Default for MetricsReport {
    fn default() -> Self {
        MetricsReport {
            schema: REPORT_SCHEMA.to_string(),
            entries: Vec::new(),
        }
    }
}

impl MetricsReport {
    pub fn push(&mut self, e: MetricEntry) {
        self.entries.push(e);
    }

    pub fn get(&self, metric: &str) -> impl Iterator<Item = &MetricEntry> {
        let m = metric.to_string();
        self.entries.iter().filter(move |e| e.metric == m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// One row per entry and source.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "metric",
            "key",
            "value",
            "unit",
            "std_err",
            "trace",
            "scenario_digest",
            "seed",
        ])?;
        for e in &self.entries {
            for s in &e.sources {
                out.write_record([
                    e.metric.as_str(),
                    e.key.as_str(),
                    &fmt_value(e.value),
                    e.unit.as_str(),
                    &e.std_err.map(fmt_value).unwrap_or_default(),
                    s.trace.as_str(),
                    s.scenario_digest.as_str(),
                    &s.seed.map(|x| x.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let key = if e.key.is_empty() {
                String::new()
            } else {
                format!("[{}]", e.key)
            };
            let err = e.std_err.map(|x| format!(" ± {}", fmt_value(x))).unwrap_or_default();
            s.push_str(&format!(
                "{}{} = {}{} {}\n",
                e.metric,
                key,
                fmt_value(e.value),
                err,
                e.unit
            ));
        }
        s
    }
}

/// JSON has no infinities, so non-finite values travel as strings.
mod real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::fmt_value(*x))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn fmt_value(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}
