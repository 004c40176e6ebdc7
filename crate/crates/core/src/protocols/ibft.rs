//! Istanbul BFT style round-based consensus among `k` authority keys.
//!
//! A round has one proposer (fixed rotation). Its proposal is answered by a
//! Prepare from every key; a quorum of Prepares makes a node Commit and lock
//! on the block; a quorum of Commits finalizes it and starts the next round.
//! Rounds that time out are replaced through a quorum of RoundChange
//! messages. Blocks become final only with a commit quorum, so the finalized
//! chain never forks.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::chain::{BlockDag, BlockId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IbftParams {
    /// Number of authority keys.
    pub k: usize,
    /// Commit quorum. Defaults to `floor(2k/3) + 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quorum: Option<usize>,
    pub round_timeout: f64,
    /// Delay between entering a round and proposing.
    pub block_period: f64,
    pub max_txs_per_block: usize,
    pub block_reward: f64,
    /// Proposer order; round `r` is led by `rotation[r mod k]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposer_rotation: Option<Vec<u32>>,
}

impl Default for IbftParams {
    fn default() -> Self {
        IbftParams {
            k: 4,
            quorum: None,
            round_timeout: 10.0,
            block_period: 1.0,
            max_txs_per_block: 1000,
            block_reward: 1.0,
            proposer_rotation: None,
        }
    }
}

impl IbftParams {
    pub fn quorum(&self) -> usize {
        self.quorum.unwrap_or(2 * self.k / 3 + 1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("ibft needs k >= 1".into());
        }
        let q = self.quorum();
        if q == 0 || q > self.k {
            return Err(format!("quorum {q} must lie in 1..={}", self.k));
        }
        if !(self.round_timeout > 0.0 && self.round_timeout.is_finite()) {
            return Err("round_timeout must be > 0".into());
        }
        if !(self.block_period >= 0.0 && self.block_period.is_finite()) {
            return Err("block_period must be >= 0".into());
        }
        if self.block_reward < 0.0 {
            return Err("block_reward must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MsgKind {
    Proposal,
    Prepare,
    Commit,
    /// `round` is the round the sender wants to move to.
    RoundChange,
}

impl MsgKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MsgKind::Proposal => "proposal",
            MsgKind::Prepare => "prepare",
            MsgKind::Commit => "commit",
            MsgKind::RoundChange => "round_change",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IbftMessage {
    pub kind: MsgKind,
    pub key: u32,
    pub round: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockId>,
}

/// True iff `messages` hold Commits for `block` from at least a quorum of
/// distinct keys.
pub fn ibft_valid<'a>(
    block: BlockId,
    messages: impl IntoIterator<Item = &'a IbftMessage>,
    params: &IbftParams,
) -> bool {
    let keys: BTreeSet<u32> = messages
        .into_iter()
        .filter(|m| m.kind == MsgKind::Commit && m.block == Some(block))
        .map(|m| m.key)
        .collect();
    keys.len() >= params.quorum()
}

/// Key that proposes in `round`.
pub fn ibft_proposer(round: u64, params: &IbftParams) -> u32 {
    let i = (round % params.k as u64) as usize;
    match &params.proposer_rotation {
        Some(rot) => rot[i],
        None => i as u32,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IbftInput {
    /// Enter round 0.
    Start,
    /// The proposal delay for `round` has elapsed.
    ProposalDue {
        round: u64,
    },
    /// This node proposes `block` (fresh or the block it is locked on).
    Propose {
        round: u64,
        block: BlockId,
    },
    Message(IbftMessage),
    Timeout {
        round: u64,
    },
    /// A finalized block with its commit seal, learned through block sync.
    Sealed {
        block: BlockId,
        round: u64,
        keys: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum IbftOutput {
    /// Broadcast to every other key holder.
    Send(IbftMessage),
    Finalize {
        block: BlockId,
        round: u64,
        keys: Vec<u32>,
    },
    ArmTimeout {
        round: u64,
        after: f64,
    },
    ArmProposal {
        round: u64,
        after: f64,
    },
}

/// Per-node consensus state. Nodes without a key follow finalized blocks
/// only.
#[derive(Debug, Clone)]
pub struct IbftNode {
    pub key: Option<u32>,
    pub round: u64,
    /// Last finalized block.
    pub head: BlockId,
    /// Block this node committed to at the current height.
    pub locked: Option<BlockId>,
    proposal: Option<BlockId>,
    commit_sent: bool,
    prepares: HashMap<(u64, BlockId), BTreeSet<u32>>,
    commits: HashMap<BlockId, BTreeSet<u32>>,
    round_changes: HashMap<u64, BTreeSet<u32>>,
    future: Vec<IbftMessage>,
}

impl IbftNode {
    pub fn new(key: Option<u32>) -> Self {
        IbftNode {
            key,
            round: 0,
            head: BlockId::GENESIS,
            locked: None,
            proposal: None,
            commit_sent: false,
            prepares: HashMap::new(),
            commits: HashMap::new(),
            round_changes: HashMap::new(),
            future: Vec::new(),
        }
    }

    /// True when `ProposalDue { round }` should make this node propose.
    pub fn should_propose(&self, round: u64, params: &IbftParams) -> bool {
        round == self.round && self.proposal.is_none() && self.key == Some(ibft_proposer(round, params))
    }

    /// Advances the state machine. `knows(b)` tells whether block `b` is in
    /// this node's view; parents are looked up in `dag`.
    pub fn step(
        &mut self,
        input: IbftInput,
        dag: &BlockDag,
        knows: &dyn Fn(BlockId) -> bool,
        params: &IbftParams,
    ) -> Vec<IbftOutput> {
        let mut out = Vec::new();
        match input {
            IbftInput::Start => self.enter_round(0, dag, knows, params, &mut out),
            IbftInput::ProposalDue { .. } => {}
            IbftInput::Propose { round, block } => {
                if let Some(key) = self.key {
                    if self.should_propose(round, params) && self.extends_head(block, dag) {
                        out.push(IbftOutput::Send(IbftMessage {
                            kind: MsgKind::Proposal,
                            key,
                            round,
                            block: Some(block),
                        }));
                        self.accept_proposal(block, dag, knows, params, &mut out);
                    }
                }
            }
            IbftInput::Message(m) => self.on_message(m, dag, knows, params, &mut out),
            IbftInput::Timeout { round } => {
                if round == self.round {
                    if let Some(key) = self.key {
                        let target = round + 1;
                        out.push(IbftOutput::Send(IbftMessage {
                            kind: MsgKind::RoundChange,
                            key,
                            round: target,
                            block: None,
                        }));
                        self.round_changes.entry(target).or_default().insert(key);
                        out.push(IbftOutput::ArmTimeout {
                            round,
                            after: params.round_timeout,
                        });
                        self.check_round_change(target, dag, knows, params, &mut out);
                    }
                }
            }
            IbftInput::Sealed { block, round, keys } => {
                let distinct: BTreeSet<u32> = keys.iter().copied().collect();
                if distinct.len() >= params.quorum() && self.extends_head(block, dag) {
                    let next = self.round.max(round) + 1;
                    self.finalize(
                        block,
                        distinct.into_iter().collect(),
                        next,
                        dag,
                        knows,
                        params,
                        &mut out,
                    );
                }
            }
        }
        out
    }

    fn extends_head(&self, block: BlockId, dag: &BlockDag) -> bool {
        dag.parent(block).ok().flatten() == Some(self.head)
    }

    fn enter_round(
        &mut self,
        round: u64,
        dag: &BlockDag,
        knows: &dyn Fn(BlockId) -> bool,
        params: &IbftParams,
        out: &mut Vec<IbftOutput>,
    ) {
        self.round = round;
        self.proposal = None;
        self.commit_sent = false;
        self.prepares.retain(|(r, _), _| *r >= round);
        self.round_changes.retain(|t, _| *t > round);
        if self.key.is_none() {
            return;
        }
        out.push(IbftOutput::ArmTimeout {
            round,
            after: params.round_timeout,
        });
        if self.key == Some(ibft_proposer(round, params)) {
            out.push(IbftOutput::ArmProposal {
                round,
                after: params.block_period,
            });
        }
        let buffered = std::mem::take(&mut self.future);
        let (now, later): (Vec<_>, Vec<_>) = buffered
            .into_iter()
            .filter(|m| m.round >= round)
            .partition(|m| m.round == round);
        self.future = later;
        for m in now {
            if self.round != round {
                // an earlier replayed message already moved us on
                self.future.push(m);
                continue;
            }
            self.on_message(m, dag, knows, params, out);
        }
    }

    fn on_message(
        &mut self,
        m: IbftMessage,
        dag: &BlockDag,
        knows: &dyn Fn(BlockId) -> bool,
        params: &IbftParams,
        out: &mut Vec<IbftOutput>,
    ) {
        if self.key.is_none() {
            return;
        }
        match m.kind {
            MsgKind::Proposal | MsgKind::Prepare if m.round > self.round => self.future.push(m),
            MsgKind::Proposal | MsgKind::Prepare if m.round < self.round => {}
            MsgKind::Proposal => {
                let Some(b) = m.block else { return };
                let from_proposer = m.key == ibft_proposer(m.round, params);
                let lock_ok = self.locked.is_none_or(|l| l == b);
                if from_proposer && self.proposal.is_none() && lock_ok && knows(b) && self.extends_head(b, dag) {
                    self.accept_proposal(b, dag, knows, params, out);
                }
            }
            MsgKind::Prepare => {
                let Some(b) = m.block else { return };
                self.prepares.entry((m.round, b)).or_default().insert(m.key);
                self.check_prepare(b, dag, knows, params, out);
            }
            MsgKind::Commit => {
                let Some(b) = m.block else { return };
                if knows(b) && !self.extends_head(b, dag) {
                    // stale commit for an earlier height
                    return;
                }
                self.commits.entry(b).or_default().insert(m.key);
                self.check_commit(b, dag, knows, params, out);
            }
            MsgKind::RoundChange => {
                if m.round > self.round {
                    self.round_changes.entry(m.round).or_default().insert(m.key);
                    self.check_round_change(m.round, dag, knows, params, out);
                }
            }
        }
    }

    fn accept_proposal(
        &mut self,
        b: BlockId,
        dag: &BlockDag,
        knows: &dyn Fn(BlockId) -> bool,
        params: &IbftParams,
        out: &mut Vec<IbftOutput>,
    ) {
        let key = self.key.expect("only key holders accept proposals");
        self.proposal = Some(b);
        out.push(IbftOutput::Send(IbftMessage {
            kind: MsgKind::Prepare,
            key,
            round: self.round,
            block: Some(b),
        }));
        self.prepares.entry((self.round, b)).or_default().insert(key);
        self.check_prepare(b, dag, knows, params, out);
        if self.proposal == Some(b) {
            self.check_commit(b, dag, knows, params, out);
        }
    }

    fn check_prepare(
        &mut self,
        b: BlockId,
        dag: &BlockDag,
        knows: &dyn Fn(BlockId) -> bool,
        params: &IbftParams,
        out: &mut Vec<IbftOutput>,
    ) {
        if self.commit_sent || self.proposal != Some(b) {
            return;
        }
        let n = self.prepares.get(&(self.round, b)).map_or(0, |s| s.len());
        if n < params.quorum() {
            return;
        }
        let key = self.key.expect("only key holders prepare");
        self.commit_sent = true;
        self.locked = Some(b);
        out.push(IbftOutput::Send(IbftMessage {
            kind: MsgKind::Commit,
            key,
            round: self.round,
            block: Some(b),
        }));
        self.commits.entry(b).or_default().insert(key);
        self.check_commit(b, dag, knows, params, out);
    }

    fn check_commit(
        &mut self,
        b: BlockId,
        dag: &BlockDag,
        knows: &dyn Fn(BlockId) -> bool,
        params: &IbftParams,
        out: &mut Vec<IbftOutput>,
    ) {
        let Some(keys) = self.commits.get(&b) else { return };
        if keys.len() < params.quorum() || !knows(b) || !self.extends_head(b, dag) {
            return;
        }
        let keys: Vec<u32> = keys.iter().copied().collect();
        let next = self.round + 1;
        self.finalize(b, keys, next, dag, knows, params, out);
    }

    fn check_round_change(
        &mut self,
        target: u64,
        dag: &BlockDag,
        knows: &dyn Fn(BlockId) -> bool,
        params: &IbftParams,
        out: &mut Vec<IbftOutput>,
    ) {
        let n = self.round_changes.get(&target).map_or(0, |s| s.len());
        if target > self.round && n >= params.quorum() {
            self.enter_round(target, dag, knows, params, out);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn finalize(
        &mut self,
        b: BlockId,
        keys: Vec<u32>,
        next_round: u64,
        dag: &BlockDag,
        knows: &dyn Fn(BlockId) -> bool,
        params: &IbftParams,
        out: &mut Vec<IbftOutput>,
    ) {
        out.push(IbftOutput::Finalize {
            block: b,
            round: self.round,
            keys,
        });
        self.head = b;
        self.locked = None;
        self.commits.clear();
        self.prepares.clear();
        self.round_changes.retain(|t, _| *t > next_round);
        self.enter_round(next_round, dag, knows, params, out);
    }
}
