//! Proof-of-work block production.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{ForkChoiceRule, ProtocolError, Tiebreak};
use crate::chain::{Block, BlockId, BlockPayload, NodeId, TxId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiningMode {
    /// Exponential inter-block times proportional to hash power.
    #[default]
    Auto,
    /// Blocks appear only where the scenario script says so.
    Scripted,
}

/// What the block creator collects per included transaction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeePolicy {
    #[default]
    PerTx,
    Fixed {
        amount: f64,
    },
}

impl FeePolicy {
    pub fn fee(&self, tx_fee: f64) -> f64 {
        match *self {
            FeePolicy::PerTx => tx_fee,
            FeePolicy::Fixed { amount } => amount,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NakamotoParams {
    /// Expected seconds between blocks across the whole network.
    pub mean_block_interval: f64,
    pub work_per_block: f64,
    pub block_reward: f64,
    pub max_txs_per_block: usize,
    pub fee_policy: FeePolicy,
    pub tiebreak: Tiebreak,
    pub confirmations: u64,
    pub mining: MiningMode,
}

impl Default for NakamotoParams {
    fn default() -> Self {
        NakamotoParams {
            mean_block_interval: 600.0,
            work_per_block: 1.0,
            block_reward: 1.0,
            max_txs_per_block: 1000,
            fee_policy: FeePolicy::PerTx,
            tiebreak: Tiebreak::FirstSeen,
            confirmations: 6,
            mining: MiningMode::Auto,
        }
    }
}

impl NakamotoParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.mean_block_interval > 0.0 && self.mean_block_interval.is_finite()) {
            return Err("mean_block_interval must be > 0".into());
        }
        if !(self.work_per_block > 0.0 && self.work_per_block.is_finite()) {
            return Err("work_per_block must be > 0".into());
        }
        if self.block_reward < 0.0 {
            return Err("block_reward must be >= 0".into());
        }
        if let FeePolicy::Fixed { amount } = self.fee_policy {
            if amount < 0.0 {
                return Err("fixed fee must be >= 0".into());
            }
        }
        Ok(())
    }

    pub fn fork_choice(&self) -> ForkChoiceRule {
        ForkChoiceRule::MostWork {
            tiebreak: self.tiebreak,
        }
    }
}

/// Time of a node's next block: `now + Exp(mean = interval / fraction)`.
pub fn next_mining_time<R: Rng + ?Sized>(
    now: f64,
    power_fraction: f64,
    params: &NakamotoParams,
    rng: &mut R,
) -> Result<f64, ProtocolError> {
    if !(power_fraction > 0.0) {
        return Err(ProtocolError::ZeroHashPower);
    }
    let rate = power_fraction / params.mean_block_interval;
    let exp = Exp::new(rate).expect("rate is positive and finite");
    Ok(now + exp.sample(rng))
}

/// A proof-of-work block on `parent` carrying `txs` (at most the block
/// capacity; extra ids are dropped from the tail).
pub fn make_block(
    id: BlockId,
    parent: BlockId,
    now: f64,
    creator: NodeId,
    mut txs: Vec<TxId>,
    params: &NakamotoParams,
) -> Block {
    txs.truncate(params.max_txs_per_block);
    Block {
        payload: BlockPayload::None,
        ..Block::new(id, parent, now, params.work_per_block, creator).with_txs(txs)
    }
}
