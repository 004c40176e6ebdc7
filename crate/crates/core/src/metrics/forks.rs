//! Forks, overturned blocks and orphans.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{MetricsError, TraceIndex};
use crate::chain::{BlockDag, BlockId, ChainError, NodeId};
use crate::simnet::Trace;

/// A period during which honest nodes' heads do not lie on one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForkInterval {
    pub start: f64,
    /// `None` while the fork is unresolved at the horizon.
    pub end: Option<f64>,
    /// Every honest head seen during the fork.
    pub tips: Vec<BlockId>,
}

/// A block that left a node's head chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overturn {
    pub block: BlockId,
    pub node: NodeId,
    pub time: f64,
}

/// True iff every head is an ancestor of the highest one.
pub fn heads_consistent(dag: &BlockDag, heads: &[BlockId]) -> Result<bool, ChainError> {
    let Some(&top) = heads.iter().max_by_key(|h| dag.height(**h).unwrap_or(0)) else {
        return Ok(true);
    };
    for &h in heads {
        if !dag.is_ancestor(h, top)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Head changes grouped by time: `(t, [(node, new head)])`, in time order.
pub(crate) fn head_changes_by_time(idx: &TraceIndex<'_>, nodes: &[bool]) -> Vec<(f64, Vec<(usize, BlockId)>)> {
    let mut groups: Vec<(f64, Vec<(usize, BlockId)>)> = Vec::new();
    for r in &idx.trace.records {
        let (Some(node), Some(h)) = (r.node, r.extra.head) else {
            continue;
        };
        if !nodes[node.index()] {
            continue;
        }
        match groups.last_mut() {
            Some((t, list)) if *t == r.t => list.push((node.index(), h)),
            _ => groups.push((r.t, vec![(node.index(), h)])),
        }
    }
    groups
}

pub fn detect_forks(trace: &Trace) -> Result<Vec<ForkInterval>, MetricsError> {
    detect_forks_in(&TraceIndex::build(trace)?)
}

/// Fork intervals among honest nodes. The state at time `t` is the state
/// after every event at `t`, so a fork that opens and closes within one
/// instant is not reported.
pub fn detect_forks_in(idx: &TraceIndex<'_>) -> Result<Vec<ForkInterval>, MetricsError> {
    let honest: Vec<usize> = (0..idx.node_count()).filter(|&i| idx.honest[i]).collect();
    let mut heads = vec![BlockId::GENESIS; idx.node_count()];
    let mut out = Vec::new();
    let mut open: Option<(f64, BTreeSet<BlockId>)> = None;
    for (t, changes) in head_changes_by_time(idx, &idx.honest) {
        for (n, h) in changes {
            heads[n] = h;
        }
        let current: Vec<BlockId> = honest.iter().map(|&i| heads[i]).collect();
        let consistent = heads_consistent(&idx.dag, &current)?;
        match (&mut open, consistent) {
            (None, false) => open = Some((t, current.into_iter().collect())),
            (Some((_, tips)), false) => tips.extend(current),
            (Some(_), true) => {
                let (start, tips) = open.take().expect("open fork");
                out.push(ForkInterval {
                    start,
                    end: Some(t),
                    tips: tips.into_iter().collect(),
                });
            }
            (None, true) => {}
        }
    }
    if let Some((start, tips)) = open {
        out.push(ForkInterval {
            start,
            end: None,
            tips: tips.into_iter().collect(),
        });
    }
    Ok(out)
}

pub fn detect_overturns(trace: &Trace) -> Result<Vec<Overturn>, MetricsError> {
    detect_overturns_in(&TraceIndex::build(trace)?)
}

/// Every `(block, node, time)` where the block was on the node's head chain
/// just before `time` and is not at `time`. Covers all nodes.
pub fn detect_overturns_in(idx: &TraceIndex<'_>) -> Result<Vec<Overturn>, MetricsError> {
    let everyone = vec![true; idx.node_count()];
    let mut heads = vec![BlockId::GENESIS; idx.node_count()];
    let mut out = Vec::new();
    for (t, changes) in head_changes_by_time(idx, &everyone) {
        let mut after: BTreeMap<usize, BlockId> = BTreeMap::new();
        for (n, h) in changes {
            after.insert(n, h);
        }
        for (n, new) in after {
            let old = heads[n];
            let cp = idx.dag.common_prefix(old, new)?;
            let mut lost = idx.dag.segment(old, cp)?;
            lost.reverse();
            out.extend(lost.into_iter().map(|block| Overturn {
                block,
                node: NodeId(n as u32),
                time: t,
            }));
            heads[n] = new;
        }
    }
    Ok(out)
}

pub fn detect_orphans(trace: &Trace) -> Result<Vec<BlockId>, MetricsError> {
    detect_orphans_in(&TraceIndex::build(trace)?)
}

/// Blocks on no node's head chain at the horizon, sorted by id.
pub fn detect_orphans_in(idx: &TraceIndex<'_>) -> Result<Vec<BlockId>, MetricsError> {
    let mut on_chain: HashSet<BlockId> = HashSet::new();
    for n in 0..idx.node_count() {
        let mut cur = Some(idx.final_head(NodeId(n as u32)));
        while let Some(b) = cur {
            if !on_chain.insert(b) {
                break;
            }
            cur = idx.dag.parent(b)?;
        }
    }
    let mut orphans: Vec<BlockId> = idx
        .dag
        .ids()
        .iter()
        .copied()
        .filter(|b| !on_chain.contains(b))
        .collect();
    orphans.sort();
    Ok(orphans)
}
