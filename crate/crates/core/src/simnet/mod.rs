//! Discrete-event network simulator.
//!
//! Nodes hold local views of the block DAG and exchange blocks,
//! transactions and consensus messages over latency-bearing edges. Every
//! processed event is recorded in a [`trace::Trace`], which is the input to
//! all metrics.

pub mod engine;
pub mod node;
pub mod queue;
pub mod topology;
pub mod trace;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chain::{BlockId, ChainError, NodeId, TxId};

pub use engine::{run, Simulation};
pub use trace::{Trace, TraceRecord};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("event at {time} scheduled before the clock ({clock})")]
    TimeInPast { time: f64, clock: f64 },
    #[error("total amount of resource {0:?} is zero")]
    ZeroTotalResource(String),
    #[error("unknown resource kind {0:?}")]
    UnknownResource(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Resource amounts by kind: `power`, `bandwidth`, `keys`.
pub type ResourceVector = BTreeMap<String, f64>;

/// Immutable copy of one node's observable state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSnapshot {
    pub id: NodeId,
    pub head: BlockId,
    /// Sorted block ids.
    pub view: Vec<BlockId>,
    /// Pending transactions, sorted.
    pub mempool: Vec<TxId>,
    pub resources: ResourceVector,
    pub strategy: String,
}

/// Immutable copy of the whole system at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub time: f64,
    pub nodes: Vec<NodeSnapshot>,
}

impl SystemState {
    /// Hex SHA-256 over the canonical JSON encoding.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("state serializes")))
    }

    pub fn heads(&self) -> Vec<BlockId> {
        self.nodes.iter().map(|n| n.head).collect()
    }

    pub fn resource_amounts(&self, kind: &str) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| n.resources.get(kind).copied().unwrap_or(0.0))
            .collect()
    }
}

/// Share `r_n / R` of resource `kind` held by node `n`.
pub fn resource_fraction(state: &SystemState, n: NodeId, kind: &str) -> Result<f64, SimError> {
    if !state.nodes.iter().any(|s| s.resources.contains_key(kind)) {
        return Err(SimError::UnknownResource(kind.to_string()));
    }
    let amounts = state.resource_amounts(kind);
    let total: f64 = amounts.iter().sum();
    if total <= 0.0 {
        return Err(SimError::ZeroTotalResource(kind.to_string()));
    }
    Ok(amounts[n.index()] / total)
}

/// Smallest share node `n` holds of any resource kind present in the
/// system: the scarcest resource bounds what the node can do.
pub fn alpha_strong(state: &SystemState, n: NodeId) -> Result<f64, SimError> {
    let kinds: std::collections::BTreeSet<&String> = state.nodes.iter().flat_map(|s| s.resources.keys()).collect();
    let mut best: Option<f64> = None;
    for kind in kinds {
        match resource_fraction(state, n, kind) {
            Ok(f) => best = Some(best.map_or(f, |b: f64| b.min(f))),
            Err(SimError::ZeroTotalResource(_)) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| SimError::ZeroTotalResource("any".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(rows: &[&[(&str, f64)]]) -> SystemState {
        SystemState {
            time: 0.0,
            nodes: rows
                .iter()
                .enumerate()
                .map(|(i, r)| NodeSnapshot {
                    id: NodeId(i as u32),
                    head: BlockId::GENESIS,
                    view: vec![BlockId::GENESIS],
                    mempool: vec![],
                    resources: r.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
                    strategy: "honest".into(),
                })
                .collect(),
        }
    }

    #[test]
    fn fractions() {
        let s = state(&[&[("power", 3.0)], &[("power", 1.0)]]);
        assert_eq!(resource_fraction(&s, NodeId(0), "power").unwrap(), 0.75);
        assert!(matches!(
            resource_fraction(&s, NodeId(0), "disk"),
            Err(SimError::UnknownResource(_))
        ));
        let z = state(&[&[("power", 0.0)], &[("power", 0.0)]]);
        assert!(matches!(
            resource_fraction(&z, NodeId(0), "power"),
            Err(SimError::ZeroTotalResource(_))
        ));
    }

    #[test]
    fn strong_alpha_is_min_share() {
        let s = state(&[
            &[("power", 3.0), ("bandwidth", 1.0)],
            &[("power", 7.0), ("bandwidth", 9.0)],
        ]);
        assert!((alpha_strong(&s, NodeId(0)).unwrap() - 0.1).abs() < 1e-12);
        assert!((alpha_strong(&s, NodeId(1)).unwrap() - 0.7).abs() < 1e-12);
    }
}
