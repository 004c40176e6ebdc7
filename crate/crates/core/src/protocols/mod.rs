//! Consensus rules: fork choice, finality and the two protocol families.

pub mod ibft;
pub mod nakamoto;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{BlockDag, BlockId, ChainError};

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("node has zero hash power")]
    ZeroHashPower,
    #[error("view is empty")]
    EmptyView,
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// How to break ties between equal-work tips.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tiebreak {
    /// Keep whichever tip was seen first.
    #[default]
    FirstSeen,
    /// Switch to a newly seen equal-work tip with probability 1/2.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForkChoiceRule {
    /// Greatest cumulative work.
    MostWork { tiebreak: Tiebreak },
    /// Highest block carrying a commit quorum; IBFT never forks.
    HighestFinalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FinalityRule {
    /// A block is final once `k` blocks sit on top of it in the head chain.
    KConfirmations { k: u64 },
    /// The head chain is final; a block joins it only with a commit quorum.
    QuorumCommit { quorum: usize },
}

impl FinalityRule {
    /// Blocks required on top of a block before it is final.
    pub fn depth(&self) -> u64 {
        match *self {
            FinalityRule::KConfirmations { k } => k,
            FinalityRule::QuorumCommit { .. } => 0,
        }
    }
}

/// Full-scan fork choice over a view listed in first-seen order.
///
/// With [`Tiebreak::Uniform`] every equal-work tip is equally likely.
pub fn fork_choice<R: Rng + ?Sized>(
    dag: &BlockDag,
    view_in_seen_order: &[BlockId],
    rule: ForkChoiceRule,
    rng: &mut R,
) -> Result<BlockId, ProtocolError> {
    let first = *view_in_seen_order.first().ok_or(ProtocolError::EmptyView)?;
    match rule {
        ForkChoiceRule::HighestFinalized => {
            let mut best = first;
            for &b in view_in_seen_order {
                if dag.height(b)? > dag.height(best)? {
                    best = b;
                }
            }
            Ok(best)
        }
        ForkChoiceRule::MostWork { tiebreak } => {
            let mut best = first;
            let mut best_work = dag.cumulative_work(first)?;
            let mut ties = 1u32;
            for &b in &view_in_seen_order[1..] {
                let w = dag.cumulative_work(b)?;
                if w > best_work {
                    best = b;
                    best_work = w;
                    ties = 1;
                } else if w == best_work && tiebreak == Tiebreak::Uniform {
                    // reservoir sampling keeps each tied tip with equal probability
                    ties += 1;
                    if rng.random_range(0..ties) == 0 {
                        best = b;
                    }
                }
            }
            Ok(best)
        }
    }
}

/// Incremental most-work rule: should a node on `head` switch to the newly
/// received `candidate`? `switch_on_tie` is the probability of moving to an
/// equal-work candidate.
pub fn prefers<R: Rng + ?Sized>(
    dag: &BlockDag,
    head: BlockId,
    candidate: BlockId,
    switch_on_tie: f64,
    rng: &mut R,
) -> Result<bool, ChainError> {
    let (h, c) = (dag.cumulative_work(head)?, dag.cumulative_work(candidate)?);
    if c > h {
        return Ok(true);
    }
    if c == h && candidate != head && switch_on_tie > 0.0 {
        return Ok(rng.random::<f64>() < switch_on_tie);
    }
    Ok(false)
}

/// Deepest final block on `chain_of(head)` under `k`-confirmation finality.
/// Genesis is always final.
pub fn final_tip(dag: &BlockDag, head: BlockId, k: u64) -> Result<BlockId, ChainError> {
    let h = dag.height(head)?;
    Ok(dag
        .ancestor_at(head, h.saturating_sub(k))?
        .expect("height is within range"))
}

/// True iff `block` lies on `chain_of(head)` with at least `k` blocks above it.
pub fn is_final(dag: &BlockDag, head: BlockId, block: BlockId, k: u64) -> Result<bool, ChainError> {
    let tip = final_tip(dag, head, k)?;
    dag.is_ancestor(block, tip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Block, NodeId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dag() -> BlockDag {
        // 0 <- 1 <- 2 and 0 <- 3 (work 1 each), 0 <- 4 (work 2)
        let mut d = BlockDag::with_genesis();
        for (id, p, w) in [(1, 0, 1.0), (2, 1, 1.0), (3, 0, 1.0), (4, 0, 2.0)] {
            d.add_block(Block::new(BlockId(id), BlockId(p), 0.0, w, NodeId(0)))
                .unwrap();
        }
        d
    }

    #[test]
    fn most_work_and_first_seen() {
        let d = dag();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rule = ForkChoiceRule::MostWork {
            tiebreak: Tiebreak::FirstSeen,
        };
        let view: Vec<_> = [0, 1, 3, 4].map(BlockId).to_vec();
        // 1, 3 have work 1; 4 has work 2
        assert_eq!(fork_choice(&d, &view, rule, &mut rng).unwrap(), BlockId(4));
        let view: Vec<_> = [0, 3, 1, 2, 4].map(BlockId).to_vec();
        // 2 and 4 tie at work 2; 2 was seen first
        assert_eq!(fork_choice(&d, &view, rule, &mut rng).unwrap(), BlockId(2));
        assert_eq!(fork_choice(&d, &[], rule, &mut rng), Err(ProtocolError::EmptyView));
    }

    #[test]
    fn uniform_tiebreak_is_fair() {
        let d = dag();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rule = ForkChoiceRule::MostWork {
            tiebreak: Tiebreak::Uniform,
        };
        let view: Vec<_> = [0, 2, 4].map(BlockId).to_vec();
        let n = 4000;
        let picks_two = (0..n)
            .filter(|_| fork_choice(&d, &view, rule, &mut rng).unwrap() == BlockId(2))
            .count();
        let share = picks_two as f64 / n as f64;
        assert!((share - 0.5).abs() < 0.04, "share {share}");
    }

    #[test]
    fn incremental_rule() {
        let d = dag();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(prefers(&d, BlockId(1), BlockId(2), 0.0, &mut rng).unwrap());
        assert!(!prefers(&d, BlockId(2), BlockId(4), 0.0, &mut rng).unwrap());
        assert!(prefers(&d, BlockId(2), BlockId(4), 1.0, &mut rng).unwrap());
        assert!(!prefers(&d, BlockId(4), BlockId(4), 1.0, &mut rng).unwrap());
    }

    #[test]
    fn k_confirmation_finality() {
        let mut d = BlockDag::with_genesis();
        for i in 1..=8 {
            d.add_block(Block::new(BlockId(i), BlockId(i - 1), 0.0, 1.0, NodeId(0)))
                .unwrap();
        }
        assert_eq!(final_tip(&d, BlockId(8), 6).unwrap(), BlockId(2));
        assert!(is_final(&d, BlockId(8), BlockId(2), 6).unwrap());
        assert!(!is_final(&d, BlockId(8), BlockId(3), 6).unwrap());
        assert_eq!(final_tip(&d, BlockId(3), 6).unwrap(), BlockId(0));
        assert!(is_final(&d, BlockId(8), BlockId(8), 0).unwrap());
    }
}
