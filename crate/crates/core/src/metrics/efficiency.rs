//! Throughput, message complexity, scalability and the price of
//! decentralization.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::Estimate;
use super::{MetricsError, TraceIndex};
use crate::chain::BlockId;
use crate::scenario::{patch, ProtocolConfig, ScenarioConfig};
use crate::simnet::{run, Trace};

/// Whether larger values of a measure are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    HigherIsBetter,
    LowerIsBetter,
}

/// Finalized transactions per second on the reference chain.
pub fn throughput(trace: &Trace) -> Result<f64, MetricsError> {
    throughput_in(&TraceIndex::build(trace)?)
}

pub fn throughput_in(idx: &TraceIndex<'_>) -> Result<f64, MetricsError> {
    let h = idx.horizon();
    if !(h > 0.0) {
        return Err(MetricsError::EmptyTrace);
    }
    let mut seen = HashSet::new();
    for b in idx.reference_chain()? {
        seen.extend(idx.dag.get(b)?.txs.iter().copied());
    }
    Ok(seen.len() as f64 / h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageComplexity {
    pub decisions: usize,
    /// Mean consensus messages per finalized decision.
    pub per_decision: f64,
    /// Messages attributed to each decision, in chain order.
    pub groups: Vec<u64>,
    /// Mean messages per decision by message kind (including gossip).
    pub by_kind: BTreeMap<String, f64>,
}

const CONSENSUS_KINDS: [&str; 4] = ["proposal", "prepare", "commit", "round_change"];

/// Messages sent per finalized decision.
///
/// IBFT: consensus messages, grouped by round; a decision finalized in
/// round `r` owns every message of the rounds since the previous decision.
/// Nakamoto: block transmissions of each finalized reference-chain block.
pub fn message_complexity(trace: &Trace) -> Result<MessageComplexity, MetricsError> {
    let idx = TraceIndex::build(trace)?;
    let mut totals: BTreeMap<String, u64> = BTreeMap::new();
    for r in &trace.records {
        for s in &r.extra.sends {
            *totals.entry(s.kind.clone()).or_default() += s.count;
        }
    }
    let groups = match &idx.config().protocol {
        ProtocolConfig::Ibft(_) => {
            let mut first: HashMap<BlockId, u64> = HashMap::new();
            for r in &trace.records {
                for f in &r.extra.finalized {
                    first.entry(f.block).or_insert(f.round);
                }
            }
            let mut rounds: Vec<u64> = first.values().copied().collect();
            rounds.sort();
            rounds.dedup();
            let mut g = vec![0u64; rounds.len()];
            for r in &trace.records {
                for s in &r.extra.sends {
                    if !CONSENSUS_KINDS.contains(&s.kind.as_str()) {
                        continue;
                    }
                    let round = s.round.unwrap_or(0);
                    let i = rounds.partition_point(|&d| d < round);
                    if i < g.len() {
                        g[i] += s.count;
                    }
                }
            }
            g
        }
        ProtocolConfig::Nakamoto(_) => {
            let chain = idx.reference_chain()?;
            let pos: HashMap<BlockId, usize> = chain.iter().enumerate().map(|(i, b)| (*b, i)).collect();
            let mut g = vec![0u64; chain.len()];
            for r in &trace.records {
                for s in &r.extra.sends {
                    if s.kind != "block" {
                        continue;
                    }
                    if let Some(i) = s.block.and_then(|b| pos.get(&b)) {
                        g[*i] += s.count;
                    }
                }
            }
            g
        }
    };
    if groups.is_empty() {
        return Err(MetricsError::NoFinalizedBlocks);
    }
    let d = groups.len() as f64;
    Ok(MessageComplexity {
        decisions: groups.len(),
        per_decision: groups.iter().sum::<u64>() as f64 / d,
        by_kind: totals.into_iter().map(|(k, v)| (k, v as f64 / d)).collect(),
        groups,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodReport {
    pub decentralized: f64,
    pub centralized: f64,
    /// How many times worse the decentralized system does.
    pub ratio: f64,
    pub polarity: Polarity,
}

/// Price of decentralization: `M(dec) / M(cen)` for costs,
/// `M(cen) / M(dec)` for benefits.
pub fn pod(decentralized: f64, centralized: f64, polarity: Polarity) -> Result<PodReport, MetricsError> {
    let (num, den) = match polarity {
        Polarity::LowerIsBetter => (decentralized, centralized),
        Polarity::HigherIsBetter => (centralized, decentralized),
    };
    if den == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok(PodReport {
        decentralized,
        centralized,
        ratio: num / den,
        polarity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Throughput,
    MessagesPerDecision,
}

impl Measure {
    pub fn polarity(self) -> Polarity {
        match self {
            Measure::Throughput => Polarity::HigherIsBetter,
            Measure::MessagesPerDecision => Polarity::LowerIsBetter,
        }
    }

    pub fn evaluate(self, trace: &Trace) -> Result<f64, MetricsError> {
        match self {
            Measure::Throughput => throughput(trace),
            Measure::MessagesPerDecision => Ok(message_complexity(trace)?.per_decision),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: serde_json::Value,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityReport {
    pub axis: String,
    pub measure: Measure,
    pub points: Vec<SweepPoint>,
    /// The measure strictly improves at every step of the axis.
    pub scalable: bool,
}

/// True iff `values` strictly improve in sweep order under `polarity`.
/// Differences within `rel_tol` of the larger magnitude count as flat.
pub fn strictly_improving(values: &[f64], polarity: Polarity, rel_tol: f64) -> bool {
    values.len() >= 2
        && values.windows(2).all(|w| {
            let tol = rel_tol * w[0].abs().max(w[1].abs());
            match polarity {
                Polarity::HigherIsBetter => w[1] > w[0] + tol,
                Polarity::LowerIsBetter => w[1] < w[0] - tol,
            }
        })
}

/// Runs `base` at each value of the dotted config `axis` and checks
/// whether the measure strictly improves as the resource grows.
pub fn scalability_sweep(
    base: &ScenarioConfig,
    axis: &str,
    values: &[serde_json::Value],
    seeds: &[u64],
    measure: Measure,
) -> Result<ScalabilityReport, MetricsError> {
    if values.len() < 3 || seeds.is_empty() {
        return Err(MetricsError::InvalidInput(
            "a scalability sweep needs three values and one seed".into(),
        ));
    }
    let base_value = serde_json::to_value(base).expect("config serializes");
    let configs: Vec<ScenarioConfig> = values
        .iter()
        .map(|v| patch(&base_value, axis, v.clone()).map_err(|e| MetricsError::InvalidInput(e.to_string())))
        .collect::<Result<_, _>>()?;
    let points: Vec<SweepPoint> = configs
        .iter()
        .zip(values)
        .map(|(cfg, v)| -> Result<SweepPoint, MetricsError> {
            let xs: Vec<f64> = seeds
                .par_iter()
                .map(|&s| measure.evaluate(&run(cfg, cfg.horizon, s)?))
                .collect::<Result<_, _>>()?;
            Ok(SweepPoint {
                value: v.clone(),
                estimate: Estimate::of(&xs),
            })
        })
        .collect::<Result<_, _>>()?;
    let means: Vec<f64> = points.iter().map(|p| p.estimate.mean).collect();
    Ok(ScalabilityReport {
        axis: axis.to_string(),
        measure,
        scalable: strictly_improving(&means, measure.polarity(), 0.01),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pod_polarity() {
        assert_eq!(pod(189.0, 9.0, Polarity::LowerIsBetter).unwrap().ratio, 21.0);
        assert_eq!(pod(2.0, 8.0, Polarity::HigherIsBetter).unwrap().ratio, 4.0);
        assert!(matches!(
            pod(1.0, 0.0, Polarity::LowerIsBetter),
            Err(MetricsError::ZeroBaseline)
        ));
    }

    #[test]
    fn improvement_detection() {
        assert!(strictly_improving(&[1.0, 2.0, 3.0], Polarity::HigherIsBetter, 0.0));
        assert!(!strictly_improving(&[1.0, 1.0, 1.0], Polarity::HigherIsBetter, 0.01));
        assert!(strictly_improving(&[3.0, 2.0], Polarity::LowerIsBetter, 0.01));
        assert!(!strictly_improving(&[1.0], Polarity::HigherIsBetter, 0.0));
    }
}
