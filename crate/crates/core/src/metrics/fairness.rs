//! Reward fairness relative to resource shares.
//!
//! A node holding fraction `p_n` of the consensus resource is treated
//! `ε`-fairly when it receives at least `(1 - ε) p_n` of the rewards.

use serde::{Deserialize, Serialize};

use super::{MetricsError, TraceIndex};
use crate::chain::NodeId;
use crate::simnet::Trace;
use crate::strategies::utility::{payoffs, UtilityModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFairness {
    pub node: NodeId,
    pub fraction: f64,
    pub share: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub nodes: Vec<NodeFairness>,
    /// Largest per-node shortfall.
    pub epsilon: f64,
    /// Resource fraction of the strongest non-honest node, if any.
    pub alpha: Option<f64>,
}

/// Per-node share `U_n / U` and shortfall `max(0, 1 - share / p_n)`.
/// Nodes without resources have `ε = 0`.
pub fn fairness_measure(rewards: &[f64], fractions: &[f64]) -> Result<FairnessReport, MetricsError> {
    if rewards.len() != fractions.len() {
        return Err(MetricsError::InvalidInput(
            "rewards and fractions differ in length".into(),
        ));
    }
    let total: f64 = rewards.iter().sum();
    if total == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    let nodes: Vec<NodeFairness> = rewards
        .iter()
        .zip(fractions)
        .enumerate()
        .map(|(i, (&r, &p))| {
            let share = r / total;
            let epsilon = if p > 0.0 { (1.0 - share / p).max(0.0) } else { 0.0 };
            NodeFairness {
                node: NodeId(i as u32),
                fraction: p,
                share,
                epsilon,
            }
        })
        .collect();
    let epsilon = nodes.iter().map(|n| n.epsilon).fold(0.0, f64::max);
    Ok(FairnessReport {
        nodes,
        epsilon,
        alpha: None,
    })
}

/// Fairness of the block rewards and fees in the reference chain.
pub fn trace_fairness(trace: &Trace) -> Result<FairnessReport, MetricsError> {
    let idx = TraceIndex::build(trace)?;
    let rewards = payoffs(&idx, &UtilityModel::default())?;
    let fractions = idx.config().consensus_fractions();
    let mut report = fairness_measure(&rewards, &fractions)?;
    report.alpha = adversary_alpha(&idx, &fractions);
    Ok(report)
}

fn adversary_alpha(idx: &TraceIndex<'_>, fractions: &[f64]) -> Option<f64> {
    (0..idx.node_count())
        .filter(|&i| !idx.honest[i])
        .map(|i| fractions[i])
        .reduce(f64::max)
}

/// Largest `ε` over consecutive windows of length `window`, counting each
/// reference-chain block in the window containing its timestamp. Windows
/// without rewards are skipped.
pub fn windowed_fairness(trace: &Trace, window: f64) -> Result<Vec<(f64, f64)>, MetricsError> {
    if !(window > 0.0) {
        return Err(MetricsError::InvalidInput(format!("window must be > 0, got {window}")));
    }
    let idx = TraceIndex::build(trace)?;
    let fractions = idx.config().consensus_fractions();
    let reward = idx.config().protocol.block_reward();
    let count = (idx.horizon() / window).ceil().max(1.0) as usize;
    let mut per_window = vec![vec![0.0; idx.node_count()]; count];
    for b in idx.reference_chain()? {
        let block = idx.dag.get(b)?;
        let Some(c) = block.creator else { continue };
        let w = ((block.timestamp / window) as usize).min(count - 1);
        per_window[w][c.index()] += reward;
    }
    let mut out = Vec::new();
    for (w, rewards) in per_window.iter().enumerate() {
        if rewards.iter().sum::<f64>() == 0.0 {
            continue;
        }
        out.push((w as f64 * window, fairness_measure(rewards, &fractions)?.epsilon));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional_rewards_are_fair() {
        let r = fairness_measure(&[3.0, 1.0], &[0.75, 0.25]).unwrap();
        assert!(r.epsilon < 1e-12);
        assert!((r.nodes[0].share - 0.75).abs() < 1e-12);
    }

    #[test]
    fn shortfall_is_relative() {
        let r = fairness_measure(&[9.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!((r.nodes[1].epsilon - 0.8).abs() < 1e-12);
        assert_eq!(r.nodes[0].epsilon, 0.0);
        assert!((r.epsilon - 0.8).abs() < 1e-12);
    }

    #[test]
    fn zero_rewards_rejected() {
        assert!(matches!(
            fairness_measure(&[0.0, 0.0], &[0.5, 0.5]),
            Err(MetricsError::ZeroBaseline)
        ));
    }
}
