//! Utility model and trace-based utility estimates.
//!
//! A node's utility rate is its payoff per unit time: rewards for blocks it
//! created in the finalized reference chain, fees of their transactions,
//! rewards for its votes on final blocks, minus running costs.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::chain::{BlockId, NodeId};
use crate::metrics::{MetricsError, TraceIndex};
use crate::protocols::nakamoto::FeePolicy;
use crate::scenario::ProtocolConfig;
use crate::simnet::Trace;

/// What "per unit time" means.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeBasis {
    /// Simulated seconds.
    #[default]
    WallClock,
    /// Reference-chain length times the target block interval. This is the
    /// clock a difficulty-retargeting chain keeps, so revenue is measured
    /// relative to the blocks that actually made it into the chain.
    ChainGrowth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UtilityModel {
    /// Value of one protocol block reward.
    pub reward_weight: f64,
    /// Value of one unit of collected fees.
    pub fee_weight: f64,
    /// Paid per final block the node sent a Commit for.
    pub vote_reward: f64,
    /// Running cost per second per unit of hash power.
    pub cost_per_power: f64,
    /// Running cost per second for every node holding a resource.
    pub fixed_cost: f64,
    /// Extra reward for a block whose parent has the same creator.
    pub consecutive_block_bonus: f64,
    pub time_basis: TimeBasis,
}

impl Default for UtilityModel {
    fn default() -> Self {
        UtilityModel {
            reward_weight: 1.0,
            fee_weight: 1.0,
            vote_reward: 0.0,
            cost_per_power: 0.0,
            fixed_cost: 0.0,
            consecutive_block_bonus: 0.0,
            time_basis: TimeBasis::WallClock,
        }
    }
}

impl UtilityModel {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.reward_weight,
            self.fee_weight,
            self.vote_reward,
            self.cost_per_power,
            self.fixed_cost,
            self.consecutive_block_bonus,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err("utility weights must be finite".into());
        }
        Ok(())
    }

    /// Every payoff and cost multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        UtilityModel {
            reward_weight: self.reward_weight * c,
            fee_weight: self.fee_weight * c,
            vote_reward: self.vote_reward * c,
            cost_per_power: self.cost_per_power * c,
            fixed_cost: self.fixed_cost * c,
            consecutive_block_bonus: self.consecutive_block_bonus * c,
            time_basis: self.time_basis,
        }
    }
}

/// Per-node payoff totals over the reference chain, before dividing by time.
pub fn payoffs(idx: &TraceIndex<'_>, model: &UtilityModel) -> Result<Vec<f64>, MetricsError> {
    let cfg = idx.config();
    let fee_policy = match &cfg.protocol {
        ProtocolConfig::Nakamoto(p) => p.fee_policy,
        ProtocolConfig::Ibft(_) => FeePolicy::PerTx,
    };
    let reward = cfg.protocol.block_reward();
    let mut out = vec![0.0; idx.node_count()];
    let chain = idx.reference_chain()?;
    for &b in &chain {
        let block = idx.dag.get(b)?;
        let Some(c) = block.creator else { continue };
        let mut v = model.reward_weight * reward;
        let fees: f64 = block
            .txs
            .iter()
            .map(|t| fee_policy.fee(idx.txs.get(t).map_or(0.0, |tx| tx.fee)))
            .sum();
        v += model.fee_weight * fees;
        let parent_creator = block.parent.and_then(|p| idx.dag.get(p).ok()).and_then(|p| p.creator);
        if parent_creator == Some(c) {
            v += model.consecutive_block_bonus;
        }
        out[c.index()] += v;
    }
    if model.vote_reward != 0.0 {
        let final_set: HashSet<BlockId> = chain.iter().copied().collect();
        let mut voted: HashSet<(NodeId, BlockId)> = HashSet::new();
        for r in &idx.trace.records {
            let Some(node) = r.node else { continue };
            for s in &r.extra.sends {
                if s.kind == "commit" {
                    if let Some(b) = s.block.filter(|b| final_set.contains(b)) {
                        voted.insert((node, b));
                    }
                }
            }
        }
        for (node, _) in voted {
            out[node.index()] += model.vote_reward;
        }
    }
    Ok(out)
}

/// Time over which payoffs are averaged.
pub fn effective_time(idx: &TraceIndex<'_>, basis: TimeBasis) -> Result<f64, MetricsError> {
    let horizon = idx.horizon();
    if !(horizon > 0.0) {
        return Err(MetricsError::EmptyTrace);
    }
    match (basis, &idx.config().protocol) {
        (TimeBasis::ChainGrowth, ProtocolConfig::Nakamoto(p)) => {
            let len = idx.reference_chain()?.len();
            if len == 0 {
                return Err(MetricsError::NoFinalizedBlocks);
            }
            Ok(len as f64 * p.mean_block_interval)
        }
        _ => Ok(horizon),
    }
}

/// Utility rate of every node.
pub fn estimate_all(trace: &Trace, model: &UtilityModel) -> Result<Vec<f64>, MetricsError> {
    let idx = TraceIndex::build(trace)?;
    estimate_all_in(&idx, model)
}

pub fn estimate_all_in(idx: &TraceIndex<'_>, model: &UtilityModel) -> Result<Vec<f64>, MetricsError> {
    let t = effective_time(idx, model.time_basis)?;
    let cfg = idx.config();
    let power = cfg.power();
    let keys = cfg.keys();
    let pay = payoffs(idx, model)?;
    Ok((0..idx.node_count())
        .map(|i| {
            let crashed = matches!(
                cfg.strategy_of(NodeId(i as u32)),
                crate::strategies::StrategySpec::Crashed
            );
            let holds = power[i] > 0.0 || keys[i].is_some();
            let cost = if crashed || !holds {
                0.0
            } else {
                model.cost_per_power * power[i] + model.fixed_cost
            };
            pay[i] / t - cost
        })
        .collect())
}

/// Utility rate of node `n`: `(integral of costs + sum of payoffs) / T`.
pub fn estimate_utility(trace: &Trace, n: NodeId, model: &UtilityModel) -> Result<f64, MetricsError> {
    let all = estimate_all(trace, model)?;
    all.get(n.index())
        .copied()
        .ok_or_else(|| MetricsError::InvalidInput(format!("no node {n}")))
}
