//! Trace-based measurements.
//!
//! Every metric is a pure function of a [`Trace`] (plus parameters). The
//! shared [`TraceIndex`] rebuilds the block DAG, per-node head histories and
//! transaction table from the records once.

pub mod audits;
pub mod decentralization;
pub mod efficiency;
pub mod fairness;
pub mod forks;
pub mod griefing;
pub mod persistence;
pub mod report;
pub mod stats;

use std::collections::HashMap;

use thiserror::Error;

use crate::chain::{BlockDag, BlockId, ChainError, NodeId, Transaction, TxId};
use crate::protocols::{final_tip, FinalityRule};
use crate::scenario::ScenarioConfig;
use crate::simnet::{SimError, Trace};

pub use audits::{audit_liveness, audit_safety, LivenessReport, SafetyReport};
pub use decentralization::{hhi, hhi_from_shares, perfect_decentralization_check, pivotality};
pub use efficiency::{message_complexity, pod, scalability_sweep, throughput};
pub use fairness::fairness_measure;
pub use forks::{detect_forks, detect_orphans, detect_overturns};
pub use griefing::griefing_factor;
pub use persistence::{persistence_check, PersistenceMode, TraceProperty, Verdict};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("trace is empty: the horizon must be positive")]
    EmptyTrace,
    #[error("no finalized blocks in the trace")]
    NoFinalizedBlocks,
    #[error("trace is inconsistent: {0}")]
    BadTrace(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("too many nodes for exhaustive enumeration: {0} (limit 20)")]
    TooManyNodes(usize),
    #[error("horizon {horizon} does not exceed the warm-up {warmup}")]
    HorizonTooShort { horizon: f64, warmup: f64 },
    #[error("baseline measure is zero")]
    ZeroBaseline,
    #[error("traces differ in more than node {0}'s strategy")]
    ProfileMismatch(NodeId),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Derived structures shared by the metrics.
pub struct TraceIndex<'a> {
    pub trace: &'a Trace,
    pub dag: BlockDag,
    pub txs: HashMap<TxId, Transaction>,
    /// Per node: `(time, head)` changes, starting with genesis at 0.
    pub heads: Vec<Vec<(f64, BlockId)>>,
    /// Follows the default strategy and is not crashed.
    pub honest: Vec<bool>,
}

impl<'a> TraceIndex<'a> {
    pub fn build(trace: &'a Trace) -> Result<Self, MetricsError> {
        let cfg = trace.scenario();
        let n = cfg.node_count();
        let mut dag = BlockDag::with_genesis();
        let mut txs = HashMap::new();
        let mut heads = vec![vec![(0.0, BlockId::GENESIS)]; n];
        for r in &trace.records {
            if let Some(b) = &r.extra.created {
                dag.add_block(b.clone())
                    .map_err(|e| MetricsError::BadTrace(e.to_string()))?;
            }
            if let Some(tx) = &r.extra.tx {
                txs.insert(tx.id, tx.clone());
            }
            if let (Some(node), Some(h)) = (r.node, r.extra.head) {
                let list = heads
                    .get_mut(node.index())
                    .ok_or_else(|| MetricsError::BadTrace(format!("record for unknown node {node}")))?;
                if !dag.contains(h) {
                    return Err(MetricsError::BadTrace(format!("head {h} was never created")));
                }
                list.push((r.t, h));
            }
        }
        let honest = (0..n).map(|i| cfg.strategy_of(NodeId(i as u32)).is_honest()).collect();
        Ok(TraceIndex {
            trace,
            dag,
            txs,
            heads,
            honest,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        self.trace.scenario()
    }

    pub fn horizon(&self) -> f64 {
        self.trace.horizon()
    }

    pub fn node_count(&self) -> usize {
        self.heads.len()
    }

    pub fn finality(&self) -> FinalityRule {
        self.config().protocol.finality_rule()
    }

    pub fn final_head(&self, n: NodeId) -> BlockId {
        self.heads[n.index()].last().expect("history starts at genesis").1
    }

    pub fn head_at(&self, n: NodeId, t: f64) -> BlockId {
        let h = &self.heads[n.index()];
        let i = h.partition_point(|(ht, _)| *ht <= t);
        h[i.saturating_sub(1)].1
    }

    pub fn observer(&self) -> NodeId {
        self.config().observer_node()
    }

    /// Finalized prefix of the observer's head chain at the horizon, as
    /// block ids from genesis upward (genesis excluded).
    pub fn reference_chain(&self) -> Result<Vec<BlockId>, MetricsError> {
        let head = self.final_head(self.observer());
        let tip = final_tip(&self.dag, head, self.finality().depth())?;
        let mut ids = self.dag.chain_of(tip)?.ids;
        ids.pop();
        ids.reverse();
        Ok(ids)
    }
}
