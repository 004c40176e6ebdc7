//! Safety and liveness audits under a finality rule.
//!
//! A node considers a block final once it lies deep enough in its head
//! chain. Since views only grow, finality is tracked along each node's head
//! history: the deepest final block only moves forward unless a reorg
//! removes blocks that were already final, which is a safety violation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::forks::head_changes_by_time;
use super::{MetricsError, TraceIndex};
use crate::chain::{BlockId, NodeId, TxId};
use crate::protocols::{final_tip, FinalityRule};
use crate::simnet::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyViolation {
    pub node: NodeId,
    pub block: BlockId,
    pub finalized_at: f64,
    pub violated_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub rule: FinalityRule,
    pub violations: Vec<SafetyViolation>,
}

impl SafetyReport {
    pub fn is_safe(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LivenessFault {
    pub tx: TxId,
    pub node: NodeId,
    pub submitted: f64,
    /// When the submitter saw it final, if ever.
    pub finalized: Option<f64>,
}

/// A stretch with no finalization progress at any honest node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stall {
    pub from: f64,
    pub to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LivenessReport {
    pub bound: f64,
    pub checked: usize,
    pub faults: Vec<LivenessFault>,
    pub stalls: Vec<Stall>,
}

impl LivenessReport {
    pub fn is_live(&self) -> bool {
        self.faults.is_empty() && self.stalls.is_empty()
    }
}

/// Finality history of every honest node.
pub(crate) struct FinalityTimeline {
    pub violations: Vec<SafetyViolation>,
    /// Per node: first time each transaction was final for it.
    pub tx_final: Vec<HashMap<TxId, f64>>,
    /// Times at which some honest node's final prefix grew.
    pub progress: Vec<f64>,
}

pub(crate) fn finality_timeline(idx: &TraceIndex<'_>, rule: FinalityRule) -> Result<FinalityTimeline, MetricsError> {
    let n = idx.node_count();
    let depth = rule.depth();
    let dag = &idx.dag;
    let mut tip = vec![BlockId::GENESIS; n];
    let mut since: Vec<HashMap<BlockId, f64>> = vec![HashMap::from([(BlockId::GENESIS, 0.0)]); n];
    let mut tx_final: Vec<HashMap<TxId, f64>> = vec![HashMap::new(); n];
    let mut violations = Vec::new();
    let mut progress = Vec::new();
    for (t, changes) in head_changes_by_time(idx, &idx.honest) {
        let mut latest: HashMap<usize, BlockId> = HashMap::new();
        for (node, h) in changes {
            latest.insert(node, h);
        }
        let mut latest: Vec<_> = latest.into_iter().collect();
        latest.sort();
        let mut advanced = false;
        for (node, head) in latest {
            let mut f = tip[node];
            if !dag.is_ancestor(f, head)? {
                let cp = dag.common_prefix(f, head)?;
                let mut lost = dag.segment(f, cp)?;
                lost.reverse();
                for b in lost {
                    violations.push(SafetyViolation {
                        node: NodeId(node as u32),
                        block: b,
                        finalized_at: since[node].remove(&b).unwrap_or(f64::NAN),
                        violated_at: t,
                    });
                }
                f = cp;
            }
            let candidate = final_tip(dag, head, depth)?;
            if dag.height(candidate)? > dag.height(f)? {
                for b in dag.segment(candidate, f)? {
                    since[node].insert(b, t);
                    for tx in &dag.get(b)?.txs {
                        tx_final[node].entry(*tx).or_insert(t);
                    }
                }
                f = candidate;
                advanced = true;
            }
            tip[node] = f;
        }
        if advanced {
            progress.push(t);
        }
    }
    Ok(FinalityTimeline {
        violations,
        tx_final,
        progress,
    })
}

pub fn audit_safety(trace: &Trace, rule: FinalityRule) -> Result<SafetyReport, MetricsError> {
    let idx = TraceIndex::build(trace)?;
    Ok(SafetyReport {
        rule,
        violations: finality_timeline(&idx, rule)?.violations,
    })
}

/// Flags every honest transaction not final for its submitter within
/// `bound`, and every gap longer than `bound` without finalization
/// progress. Transactions whose deadline lies past the horizon are only
/// flagged if they were finalized late.
pub fn audit_liveness(trace: &Trace, bound: f64) -> Result<LivenessReport, MetricsError> {
    if !(bound > 0.0) {
        return Err(MetricsError::InvalidInput(format!(
            "liveness bound must be > 0, got {bound}"
        )));
    }
    let idx = TraceIndex::build(trace)?;
    let horizon = idx.horizon();
    let timeline = finality_timeline(&idx, idx.finality())?;
    let mut txs: Vec<_> = idx.txs.values().filter(|tx| idx.honest[tx.creator.index()]).collect();
    txs.sort_by_key(|tx| tx.id);
    let mut faults = Vec::new();
    for tx in &txs {
        let fin = timeline.tx_final[tx.creator.index()].get(&tx.id).copied();
        let late = match fin {
            Some(f) => f - tx.created_at > bound,
            None => tx.created_at + bound <= horizon,
        };
        if late {
            faults.push(LivenessFault {
                tx: tx.id,
                node: tx.creator,
                submitted: tx.created_at,
                finalized: fin,
            });
        }
    }
    let mut stalls = Vec::new();
    let mut last = 0.0;
    for &t in timeline.progress.iter().chain(std::iter::once(&horizon)) {
        if t - last > bound {
            stalls.push(Stall { from: last, to: t });
        }
        last = t;
    }
    Ok(LivenessReport {
        bound,
        checked: txs.len(),
        faults,
        stalls,
    })
}
