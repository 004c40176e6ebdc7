//! Node strategies. A strategy sees what the protocol prescribes at each
//! decision point and returns the actions the node actually takes.

pub mod incentive;
pub mod selfish;
pub mod utility;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::{BlockDag, BlockId, NodeId, Transaction};
use crate::protocols::ibft::{IbftMessage, MsgKind};
use crate::scenario::ProtocolConfig;

pub use selfish::Selfish;

/// Something the node does in response to a trigger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    SetHead(BlockId),
    /// Send one of the node's own blocks to every gossip neighbor.
    Publish(BlockId),
    /// Forward a received block to every gossip neighbor except `except`.
    Relay {
        block: BlockId,
        except: Option<NodeId>,
    },
    /// Send a consensus message to every other key holder.
    Consensus(IbftMessage),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trigger {
    /// The node just created `block` on its head.
    Mined(BlockId),
    /// `block` entered the node's view.
    Received { block: BlockId, from: Option<NodeId> },
    /// Output of the consensus state machine.
    Protocol,
    /// Scripted wake-up.
    Wake,
}

/// Read-only view of the deciding node.
pub struct DecisionContext<'a> {
    pub node: NodeId,
    pub now: f64,
    pub head: BlockId,
    pub dag: &'a BlockDag,
}

impl DecisionContext<'_> {
    pub fn creator(&self, b: BlockId) -> Option<NodeId> {
        self.dag.get(b).ok().and_then(|b| b.creator)
    }

    pub fn height(&self, b: BlockId) -> u64 {
        self.dag.height(b).expect("block in dag")
    }
}

pub trait Strategy: Send + fmt::Debug {
    fn decide(&mut self, ctx: &DecisionContext<'_>, trigger: &Trigger, prescribed: Vec<Action>) -> Vec<Action>;

    /// Crashed nodes neither mine, submit nor process anything.
    fn crashed(&self) -> bool {
        false
    }

    /// Whether the node includes `tx` in its own blocks.
    fn admits(&self, _tx: &Transaction) -> bool {
        true
    }

    /// Probability that an honest node receiving this node's block in a
    /// work tie switches to it.
    fn tie_advantage(&self) -> f64 {
        0.0
    }
}

/// Declarative strategy choice used in scenarios.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    /// The protocol's prescribed behaviour.
    #[default]
    Honest,
    /// Lead-based block withholding.
    Selfish {
        #[serde(default)]
        gamma: f64,
    },
    /// Never publishes own blocks; in IBFT never sends Commit.
    Withhold,
    /// Mines on its own chain only and publishes it when woken.
    PrivateChain,
    /// Leaves transactions created by `creators` out of its blocks.
    Censor {
        creators: Vec<u32>,
    },
    Crashed,
}

impl StrategySpec {
    pub fn is_honest(&self) -> bool {
        matches!(self, StrategySpec::Honest)
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Honest => "honest",
            StrategySpec::Selfish { .. } => "selfish",
            StrategySpec::Withhold => "withhold",
            StrategySpec::PrivateChain => "private_chain",
            StrategySpec::Censor { .. } => "censor",
            StrategySpec::Crashed => "crashed",
        }
    }

    pub fn validate(&self, protocol: &ProtocolConfig) -> Result<(), String> {
        let nakamoto = matches!(protocol, ProtocolConfig::Nakamoto(_));
        match self {
            StrategySpec::Selfish { gamma } => {
                if !nakamoto {
                    return Err("selfish strategy needs a Nakamoto protocol".into());
                }
                if !(0.0..=1.0).contains(gamma) {
                    return Err(format!("gamma must lie in [0, 1], got {gamma}"));
                }
            }
            StrategySpec::PrivateChain if !nakamoto => {
                return Err("private_chain strategy needs a Nakamoto protocol".into());
            }
            _ => {}
        }
        Ok(())
    }

    pub fn build(&self) -> Box<dyn Strategy> {
        match self {
            StrategySpec::Honest => Box::new(Honest),
            StrategySpec::Selfish { gamma } => Box::new(Selfish::new(*gamma)),
            StrategySpec::Withhold => Box::new(Withhold),
            StrategySpec::PrivateChain => Box::new(PrivateChain::default()),
            StrategySpec::Censor { creators } => Box::new(Censor {
                creators: creators.iter().map(|&c| NodeId(c)).collect(),
            }),
            StrategySpec::Crashed => Box::new(Crashed),
        }
    }
}

/// The default strategy: exactly what the protocol prescribes.
pub fn default_decide(_ctx: &DecisionContext<'_>, _trigger: &Trigger, prescribed: Vec<Action>) -> Vec<Action> {
    prescribed
}

#[derive(Debug, Clone, Copy)]
pub struct Honest;

impl Strategy for Honest {
    fn decide(&mut self, ctx: &DecisionContext<'_>, trigger: &Trigger, prescribed: Vec<Action>) -> Vec<Action> {
        default_decide(ctx, trigger, prescribed)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Withhold;

impl Strategy for Withhold {
    fn decide(&mut self, ctx: &DecisionContext<'_>, _trigger: &Trigger, prescribed: Vec<Action>) -> Vec<Action> {
        prescribed
            .into_iter()
            .filter(|a| match a {
                Action::Publish(b) => ctx.creator(*b) != Some(ctx.node),
                Action::Consensus(m) => m.kind != MsgKind::Commit,
                _ => true,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct PrivateChain {
    withheld: Vec<BlockId>,
}

impl Strategy for PrivateChain {
    fn decide(&mut self, _ctx: &DecisionContext<'_>, trigger: &Trigger, _prescribed: Vec<Action>) -> Vec<Action> {
        match *trigger {
            Trigger::Mined(b) => {
                self.withheld.push(b);
                vec![Action::SetHead(b)]
            }
            Trigger::Wake => self.withheld.drain(..).map(Action::Publish).collect(),
            Trigger::Received { .. } | Trigger::Protocol => Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Censor {
    pub creators: Vec<NodeId>,
}

impl Strategy for Censor {
    fn decide(&mut self, ctx: &DecisionContext<'_>, trigger: &Trigger, prescribed: Vec<Action>) -> Vec<Action> {
        default_decide(ctx, trigger, prescribed)
    }

    fn admits(&self, tx: &Transaction) -> bool {
        !self.creators.contains(&tx.creator)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Crashed;

impl Strategy for Crashed {
    fn decide(&mut self, _ctx: &DecisionContext<'_>, _trigger: &Trigger, _prescribed: Vec<Action>) -> Vec<Action> {
        Vec::new()
    }

    fn crashed(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Block, TxId};

    fn ctx(dag: &BlockDag) -> DecisionContext<'_> {
        DecisionContext {
            node: NodeId(0),
            now: 0.0,
            head: BlockId::GENESIS,
            dag,
        }
    }

    #[test]
    fn honest_returns_prescribed() {
        let dag = BlockDag::with_genesis();
        let prescribed = vec![Action::SetHead(BlockId(0)), Action::Publish(BlockId(0))];
        let got = Honest.decide(&ctx(&dag), &Trigger::Wake, prescribed.clone());
        assert_eq!(got, prescribed);
    }

    #[test]
    fn withhold_drops_own_blocks_and_commits() {
        let mut dag = BlockDag::with_genesis();
        dag.add_block(Block::new(BlockId(1), BlockId(0), 0.0, 1.0, NodeId(0)))
            .unwrap();
        dag.add_block(Block::new(BlockId(2), BlockId(0), 0.0, 1.0, NodeId(1)))
            .unwrap();
        let m = |kind| IbftMessage {
            kind,
            key: 0,
            round: 0,
            block: Some(BlockId(1)),
        };
        let prescribed = vec![
            Action::Publish(BlockId(1)),
            Action::Publish(BlockId(2)),
            Action::Consensus(m(MsgKind::Prepare)),
            Action::Consensus(m(MsgKind::Commit)),
        ];
        let got = Withhold.decide(&ctx(&dag), &Trigger::Protocol, prescribed);
        assert_eq!(
            got,
            vec![Action::Publish(BlockId(2)), Action::Consensus(m(MsgKind::Prepare))]
        );
    }

    #[test]
    fn private_chain_releases_on_wake() {
        let dag = BlockDag::with_genesis();
        let mut s = PrivateChain::default();
        let c = ctx(&dag);
        assert_eq!(
            s.decide(&c, &Trigger::Mined(BlockId(1)), vec![]),
            vec![Action::SetHead(BlockId(1))]
        );
        s.decide(&c, &Trigger::Mined(BlockId(2)), vec![]);
        assert!(s
            .decide(
                &c,
                &Trigger::Received {
                    block: BlockId(3),
                    from: None
                },
                vec![Action::SetHead(BlockId(3))]
            )
            .is_empty());
        assert_eq!(
            s.decide(&c, &Trigger::Wake, vec![]),
            vec![Action::Publish(BlockId(1)), Action::Publish(BlockId(2))]
        );
    }

    #[test]
    fn censor_filters_by_creator() {
        let s = Censor {
            creators: vec![NodeId(2)],
        };
        let tx = |c| Transaction {
            id: TxId(1),
            created_at: 0.0,
            fee: 1.0,
            creator: NodeId(c),
        };
        assert!(s.admits(&tx(1)));
        assert!(!s.admits(&tx(2)));
    }

    #[test]
    fn spec_validation() {
        let ibft = ProtocolConfig::Ibft(Default::default());
        assert!(StrategySpec::Selfish { gamma: 0.0 }.validate(&ibft).is_err());
        let nak = ProtocolConfig::Nakamoto(Default::default());
        assert!(StrategySpec::Selfish { gamma: 1.5 }.validate(&nak).is_err());
        assert!(StrategySpec::Withhold.validate(&ibft).is_ok());
    }
}
