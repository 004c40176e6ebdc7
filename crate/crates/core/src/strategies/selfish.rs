//! Lead-based selfish mining.
//!
//! The attacker mines on a private branch and reacts to each new public
//! block according to its lead just before that block:
//!
//! | lead | reaction                                       |
//! |------|------------------------------------------------|
//! | 0    | adopt the public block, drop the private branch |
//! | 1    | publish the private block and race              |
//! | 2    | publish everything, the private branch wins     |
//! | > 2  | publish the private block at the same height    |
//!
//! Mining a block while racing publishes it immediately, which settles the
//! race in the attacker's favour.

use super::{Action, DecisionContext, Strategy, Trigger};
use crate::chain::BlockId;

#[derive(Debug, Clone)]
pub struct Selfish {
    gamma: f64,
    withheld: Vec<BlockId>,
    public_height: u64,
    racing: bool,
}

impl Selfish {
    pub fn new(gamma: f64) -> Self {
        Selfish {
            gamma,
            withheld: Vec::new(),
            public_height: 0,
            racing: false,
        }
    }

    pub fn withheld(&self) -> &[BlockId] {
        &self.withheld
    }

    fn publish_all(&mut self) -> Vec<Action> {
        self.withheld.drain(..).map(Action::Publish).collect()
    }
}

impl Strategy for Selfish {
    fn decide(&mut self, ctx: &DecisionContext<'_>, trigger: &Trigger, prescribed: Vec<Action>) -> Vec<Action> {
        match *trigger {
            Trigger::Mined(b) => {
                self.withheld.push(b);
                let mut out = vec![Action::SetHead(b)];
                if self.racing {
                    self.racing = false;
                    self.public_height = ctx.height(b);
                    out.extend(self.publish_all());
                }
                out
            }
            Trigger::Received { block, from } => {
                if ctx.creator(block) == Some(ctx.node) {
                    return Vec::new();
                }
                let mut out = vec![Action::Relay { block, except: from }];
                let h = ctx.height(block);
                if h <= self.public_height {
                    return out;
                }
                let lead = ctx.height(ctx.head) as i64 - self.public_height as i64;
                self.public_height = h;
                match lead {
                    i64::MIN..=0 => {
                        self.withheld.clear();
                        self.racing = false;
                        out.push(Action::SetHead(block));
                    }
                    1 => {
                        self.racing = true;
                        out.extend(self.publish_all());
                    }
                    2 => {
                        self.racing = false;
                        self.public_height = ctx.height(ctx.head);
                        out.extend(self.publish_all());
                    }
                    _ => {
                        let split = self.withheld.iter().take_while(|&&w| ctx.height(w) <= h).count();
                        out.extend(self.withheld.drain(..split).map(Action::Publish));
                    }
                }
                out
            }
            Trigger::Wake | Trigger::Protocol => prescribed,
        }
    }

    fn tie_advantage(&self) -> f64 {
        self.gamma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Block, BlockDag, NodeId};

    const ME: NodeId = NodeId(0);
    const THEM: NodeId = NodeId(1);

    struct World {
        dag: BlockDag,
        head: BlockId,
        next: u64,
        s: Selfish,
    }

    impl World {
        fn new() -> Self {
            World {
                dag: BlockDag::with_genesis(),
                head: BlockId::GENESIS,
                next: 1,
                s: Selfish::new(0.0),
            }
        }

        fn add(&mut self, parent: BlockId, who: NodeId) -> BlockId {
            let id = BlockId(self.next);
            self.next += 1;
            self.dag.add_block(Block::new(id, parent, 0.0, 1.0, who)).unwrap();
            id
        }

        fn apply(&mut self, actions: &[Action]) -> Vec<BlockId> {
            let mut published = Vec::new();
            for a in actions {
                match *a {
                    Action::SetHead(b) => self.head = b,
                    Action::Publish(b) => published.push(b),
                    _ => {}
                }
            }
            published
        }

        fn mine(&mut self) -> (BlockId, Vec<BlockId>) {
            let b = self.add(self.head, ME);
            let ctx = DecisionContext {
                node: ME,
                now: 0.0,
                head: self.head,
                dag: &self.dag,
            };
            let out = self
                .s
                .decide(&ctx, &Trigger::Mined(b), vec![Action::SetHead(b), Action::Publish(b)]);
            (b, self.apply(&out))
        }

        fn honest(&mut self, parent: BlockId) -> (BlockId, Vec<BlockId>) {
            let b = self.add(parent, THEM);
            let ctx = DecisionContext {
                node: ME,
                now: 0.0,
                head: self.head,
                dag: &self.dag,
            };
            let out = self.s.decide(
                &ctx,
                &Trigger::Received {
                    block: b,
                    from: Some(THEM),
                },
                vec![],
            );
            (b, self.apply(&out))
        }
    }

    #[test]
    fn lead_zero_adopts() {
        let mut w = World::new();
        let (h1, published) = w.honest(BlockId::GENESIS);
        assert!(published.is_empty());
        assert_eq!(w.head, h1);
    }

    #[test]
    fn lead_one_races_and_mining_wins() {
        let mut w = World::new();
        let (a1, p) = w.mine();
        assert!(p.is_empty());
        let (_h1, p) = w.honest(BlockId::GENESIS);
        assert_eq!(p, vec![a1]);
        let (a2, p) = w.mine();
        assert_eq!(p, vec![a2]);
        assert_eq!(w.head, a2);
        assert!(w.s.withheld().is_empty());
    }

    #[test]
    fn lead_one_race_lost() {
        let mut w = World::new();
        w.mine();
        let (h1, _) = w.honest(BlockId::GENESIS);
        let (h2, p) = w.honest(h1);
        assert!(p.is_empty());
        assert_eq!(w.head, h2);
    }

    #[test]
    fn lead_two_publishes_all() {
        let mut w = World::new();
        let (a1, _) = w.mine();
        let (a2, _) = w.mine();
        let (_h1, p) = w.honest(BlockId::GENESIS);
        assert_eq!(p, vec![a1, a2]);
        assert_eq!(w.head, a2);
    }

    #[test]
    fn long_lead_publishes_matching_height() {
        let mut w = World::new();
        let a: Vec<_> = (0..4).map(|_| w.mine().0).collect();
        let (h1, p) = w.honest(BlockId::GENESIS);
        assert_eq!(p, vec![a[0]]);
        let (h2, p) = w.honest(h1);
        assert_eq!(p, vec![a[1]]);
        // lead is now 2: everything goes out
        let (_h3, p) = w.honest(h2);
        assert_eq!(p, vec![a[2], a[3]]);
        assert_eq!(w.head, a[3]);
    }
}
