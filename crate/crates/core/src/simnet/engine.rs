//! The event loop.
//!
//! Randomness comes from independent ChaCha streams derived from the seed:
//! one per node for mining and for transaction workload, one for latency and
//! one for tie-breaking. Two runs that differ only in one node's strategy
//! therefore see identical mining and workload draws.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::node::NodeState;
use super::queue::{Event, EventKind, EventQueue};
use super::topology::Topology;
use super::trace::{Extra, Finalization, PartitionChange, RecordKind, Trace, TraceHeader, TraceRecord, TRACE_SCHEMA};
use super::{ResourceVector, SimError, SystemState};
use crate::chain::{Block, BlockDag, BlockId, BlockPayload, NodeId, Transaction, TxId};
use crate::protocols::ibft::{IbftInput, IbftMessage, IbftNode, IbftOutput, IbftParams};
use crate::protocols::nakamoto::{self, MiningMode, NakamotoParams};
use crate::protocols::{prefers, Tiebreak};
use crate::scenario::{FeeDistribution, ProtocolConfig, ScenarioConfig, ScriptedEvent};
use crate::strategies::{Action, DecisionContext, Strategy, Trigger};

const STREAM_LATENCY: u64 = 1;
const STREAM_TIEBREAK: u64 = 2;
const STREAM_MINING: u64 = 1_000;
const STREAM_WORKLOAD: u64 = 1_000_000;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs `scenario` up to `horizon` and returns the trace.
pub fn run(scenario: &ScenarioConfig, horizon: f64, seed: u64) -> Result<Trace, SimError> {
    let mut cfg = scenario.clone();
    cfg.horizon = horizon;
    let mut sim = Simulation::new(&cfg, seed)?;
    sim.run_until(horizon)?;
    Ok(sim.into_trace())
}

pub struct Simulation {
    cfg: ScenarioConfig,
    seed: u64,
    horizon: f64,
    now: f64,
    queue: EventQueue,
    topo: Topology,
    dag: BlockDag,
    nodes: Vec<NodeState>,
    strategies: Vec<Box<dyn Strategy>>,
    txs: Vec<Transaction>,
    keys: Vec<Option<u32>>,
    key_holders: Vec<NodeId>,
    power_fraction: Vec<f64>,
    seals: HashMap<BlockId, (u64, Vec<u32>)>,
    next_block: u64,
    rng_mining: Vec<ChaCha8Rng>,
    rng_workload: Vec<ChaCha8Rng>,
    rng_latency: ChaCha8Rng,
    rng_tie: ChaCha8Rng,
    records: Vec<TraceRecord>,
    delta: Extra,
    next_snapshot: Option<f64>,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self, SimError> {
        cfg.validate().map_err(|e| SimError::Config(e.to_string()))?;
        let topo = Topology::build(cfg)?;
        let n = cfg.node_count();
        let power = cfg.power();
        let total_power: f64 = power.iter().sum();
        let keys = cfg.keys();
        let is_ibft = matches!(cfg.protocol, ProtocolConfig::Ibft(_));
        let mut key_holders = Vec::new();
        if let ProtocolConfig::Ibft(p) = &cfg.protocol {
            key_holders = vec![NodeId(u32::MAX); p.k];
            for (i, k) in keys.iter().enumerate() {
                if let Some(k) = k {
                    key_holders[*k as usize] = NodeId(i as u32);
                }
            }
            let held: Vec<NodeId> = key_holders.iter().copied().filter(|h| h.0 != u32::MAX).collect();
            for (i, &a) in held.iter().enumerate() {
                for &b in &held[i + 1..] {
                    if topo.edge_between(a, b).is_none() {
                        return Err(SimError::Config(format!(
                            "validators {a} and {b} are not directly connected"
                        )));
                    }
                }
            }
        }
        let strategies: Vec<Box<dyn Strategy>> = (0..n).map(|i| cfg.strategy_of(NodeId(i as u32)).build()).collect();
        let nodes = (0..n)
            .map(|i| {
                let mut res = ResourceVector::new();
                res.insert("power".into(), power[i]);
                if let Some(b) = cfg.resources.bandwidth.get(i) {
                    res.insert("bandwidth".into(), *b);
                }
                if is_ibft {
                    res.insert("keys".into(), if keys[i].is_some() { 1.0 } else { 0.0 });
                }
                let ibft = is_ibft.then(|| IbftNode::new(keys[i]));
                NodeState::new(
                    NodeId(i as u32),
                    res,
                    cfg.strategy_of(NodeId(i as u32)).name().to_string(),
                    ibft,
                )
            })
            .collect();
        let mut sim = Simulation {
            cfg: cfg.clone(),
            seed,
            horizon: cfg.horizon,
            now: 0.0,
            queue: EventQueue::new(),
            topo,
            dag: BlockDag::with_genesis(),
            nodes,
            strategies,
            txs: Vec::new(),
            keys,
            key_holders,
            power_fraction: power
                .iter()
                .map(|p| if total_power > 0.0 { p / total_power } else { 0.0 })
                .collect(),
            seals: HashMap::new(),
            next_block: 1,
            rng_mining: (0..n as u64).map(|i| stream(seed, STREAM_MINING + i)).collect(),
            rng_workload: (0..n as u64).map(|i| stream(seed, STREAM_WORKLOAD + i)).collect(),
            rng_latency: stream(seed, STREAM_LATENCY),
            rng_tie: stream(seed, STREAM_TIEBREAK),
            records: Vec::new(),
            delta: Extra::default(),
            next_snapshot: cfg.snapshot_interval,
        };
        sim.schedule_initial()?;
        sim.emit_snapshot(0.0);
        Ok(sim)
    }

    fn schedule_initial(&mut self) -> Result<(), SimError> {
        for (i, p) in self.topo.partitions().to_vec().iter().enumerate() {
            self.queue
                .schedule(p.start, EventKind::PartitionChange { index: i, active: true })?;
            self.queue.schedule(
                p.end,
                EventKind::PartitionChange {
                    index: i,
                    active: false,
                },
            )?;
        }
        if let ProtocolConfig::Nakamoto(p) = &self.cfg.protocol {
            if p.mining == MiningMode::Auto {
                let p = p.clone();
                for i in 0..self.nodes.len() {
                    if self.power_fraction[i] > 0.0 && !self.strategies[i].crashed() {
                        let t = nakamoto::next_mining_time(0.0, self.power_fraction[i], &p, &mut self.rng_mining[i])
                            .expect("positive power");
                        self.queue.schedule(
                            t,
                            EventKind::BlockMined {
                                node: NodeId(i as u32),
                                scripted: false,
                            },
                        )?;
                    }
                }
            }
        }
        for ev in self.cfg.script.clone() {
            let node = NodeId(ev.node());
            let kind = match ev {
                ScriptedEvent::Mine { .. } => EventKind::BlockMined { node, scripted: true },
                ScriptedEvent::Tx { fee, .. } => EventKind::TxCreated {
                    node,
                    fee: Some(fee),
                    scripted: true,
                },
                ScriptedEvent::Wake { .. } => EventKind::StrategyWake { node },
            };
            self.queue.schedule(ev.at(), kind)?;
        }
        let w = self.cfg.workload.clone();
        let submitters: Vec<usize> = match &w.submitters {
            Some(s) => s.iter().map(|&x| x as usize).collect(),
            None => (0..self.nodes.len()).collect(),
        };
        for &i in &submitters {
            if self.strategies[i].crashed() {
                continue;
            }
            let node = NodeId(i as u32);
            for _ in 0..w.backlog {
                self.queue.schedule(
                    0.0,
                    EventKind::TxCreated {
                        node,
                        fee: None,
                        scripted: true,
                    },
                )?;
            }
            if w.tx_rate > 0.0 {
                let t = Exp::new(w.tx_rate)
                    .expect("positive rate")
                    .sample(&mut self.rng_workload[i]);
                self.queue.schedule(
                    t,
                    EventKind::TxCreated {
                        node,
                        fee: None,
                        scripted: false,
                    },
                )?;
            }
        }
        if let ProtocolConfig::Ibft(params) = &self.cfg.protocol {
            let params = params.clone();
            for i in 0..self.nodes.len() {
                if self.strategies[i].crashed() {
                    continue;
                }
                let out = self.ibft_step(i, IbftInput::Start, &params);
                self.apply_ibft(i, out, &params)?;
            }
            self.delta = Extra::default();
        }
        Ok(())
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dag(&self) -> &BlockDag {
        &self.dag
    }

    pub fn node(&self, n: NodeId) -> &NodeState {
        &self.nodes[n.index()]
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.txs
    }

    pub fn snapshot(&self) -> SystemState {
        SystemState {
            time: self.now,
            nodes: self.nodes.iter().map(|n| n.snapshot()).collect(),
        }
    }

    /// Processes every event with time `<= min(t, horizon)`.
    pub fn run_until(&mut self, t: f64) -> Result<(), SimError> {
        let limit = t.min(self.horizon);
        while let Some(next) = self.queue.peek_time() {
            if next > limit {
                break;
            }
            self.flush_snapshots(|s| s < next);
            let ev = self.queue.pop().expect("peeked");
            self.handle(ev)?;
        }
        self.flush_snapshots(|s| s <= limit);
        if limit > self.now {
            self.now = limit;
            self.queue.advance_to(limit);
        }
        Ok(())
    }

    pub fn into_trace(self) -> Trace {
        let final_state = self.snapshot();
        Trace {
            header: TraceHeader {
                schema: TRACE_SCHEMA.to_string(),
                seed: self.seed,
                scenario_digest: self.cfg.digest(),
                scenario: self.cfg,
            },
            records: self.records,
            final_state: Some(final_state),
        }
    }

    fn flush_snapshots(&mut self, due: impl Fn(f64) -> bool) {
        while let Some(s) = self.next_snapshot {
            if s > self.horizon || !due(s) {
                break;
            }
            self.emit_snapshot(s);
            self.next_snapshot = Some(s + self.cfg.snapshot_interval.expect("interval set"));
        }
    }

    fn emit_snapshot(&mut self, t: f64) {
        let state = SystemState {
            time: t,
            nodes: self.nodes.iter().map(|n| n.snapshot()).collect(),
        };
        let extra = Extra {
            digest: Some(state.digest()),
            heads: state.heads(),
            ..Extra::default()
        };
        let seq = self.queue.alloc_seq();
        self.records.push(TraceRecord {
            t,
            seq,
            kind: RecordKind::Snapshot,
            node: None,
            block: None,
            parent: None,
            extra,
        });
    }

    fn handle(&mut self, ev: Event) -> Result<(), SimError> {
        self.now = ev.time;
        self.delta = Extra::default();
        let (kind, node, block) = match ev.kind {
            EventKind::BlockMined { node, scripted } => {
                let b = self.on_mined(node.index(), scripted)?;
                (RecordKind::BlockMined, Some(node), b)
            }
            EventKind::BlockArrival { node, from, blocks } => {
                let first = blocks.first().copied();
                self.delta.from = Some(from);
                self.on_block_arrival(node.index(), from, blocks)?;
                (RecordKind::BlockArrival, Some(node), first)
            }
            EventKind::TxCreated { node, fee, scripted } => {
                self.on_tx_created(node.index(), fee, scripted)?;
                (RecordKind::TxCreated, Some(node), None)
            }
            EventKind::TxArrival { node, from, txs } => {
                self.delta.from = Some(from);
                self.on_tx_arrival(node.index(), from, txs)?;
                (RecordKind::TxArrival, Some(node), None)
            }
            EventKind::ProtocolMsgArrival { node, from, msg } => {
                self.delta.from = Some(from);
                self.delta.msg = Some(msg);
                self.on_protocol_msg(node.index(), msg)?;
                (RecordKind::ProtocolMsg, Some(node), msg.block)
            }
            EventKind::RoundTimeout { node, round } => {
                self.delta.round = Some(round);
                self.on_ibft_input(node.index(), IbftInput::Timeout { round })?;
                (RecordKind::RoundTimeout, Some(node), None)
            }
            EventKind::ProposalDue { node, round } => {
                self.delta.round = Some(round);
                let b = self.on_proposal_due(node.index(), round)?;
                (RecordKind::ProposalDue, Some(node), b)
            }
            EventKind::PartitionChange { index, active } => {
                self.on_partition(index, active)?;
                (RecordKind::Partition, None, None)
            }
            EventKind::StrategyWake { node } => {
                self.on_wake(node.index())?;
                (RecordKind::StrategyWake, Some(node), None)
            }
        };
        let parent = block.and_then(|b| self.dag.parent(b).ok().flatten());
        self.records.push(TraceRecord {
            t: ev.time,
            seq: ev.seq,
            kind,
            node,
            block,
            parent,
            extra: std::mem::take(&mut self.delta),
        });
        Ok(())
    }

    fn nakamoto_params(&self) -> Option<&NakamotoParams> {
        match &self.cfg.protocol {
            ProtocolConfig::Nakamoto(p) => Some(p),
            ProtocolConfig::Ibft(_) => None,
        }
    }

    fn ibft_params(&self) -> Option<IbftParams> {
        match &self.cfg.protocol {
            ProtocolConfig::Ibft(p) => Some(p.clone()),
            ProtocolConfig::Nakamoto(_) => None,
        }
    }

    /// Best pending transactions the node is willing to include.
    fn select_txs(&self, n: usize) -> Vec<TxId> {
        let cap = self.cfg.protocol.max_txs_per_block();
        let strategy = &self.strategies[n];
        self.nodes[n]
            .mempool
            .pending()
            .filter(|id| strategy.admits(&self.txs[id.0 as usize]))
            .take(cap)
            .collect()
    }

    fn create_block(&mut self, n: usize, payload: BlockPayload, work: f64) -> Result<BlockId, SimError> {
        let id = BlockId(self.next_block);
        self.next_block += 1;
        let parent = self.nodes[n].head;
        let txs = self.select_txs(n);
        let block = Block {
            payload,
            ..Block::new(id, parent, self.now, work, NodeId(n as u32)).with_txs(txs)
        };
        self.dag.add_block(block.clone())?;
        self.nodes[n].add_to_view(id);
        self.delta.added.push(id);
        self.delta.created = Some(block);
        Ok(id)
    }

    fn decide(&mut self, n: usize, trigger: Trigger, prescribed: Vec<Action>) -> Vec<Action> {
        let ctx = DecisionContext {
            node: NodeId(n as u32),
            now: self.now,
            head: self.nodes[n].head,
            dag: &self.dag,
        };
        self.strategies[n].decide(&ctx, &trigger, prescribed)
    }

    fn on_mined(&mut self, n: usize, scripted: bool) -> Result<Option<BlockId>, SimError> {
        let Some(params) = self.nakamoto_params().cloned() else {
            self.delta.ignored = true;
            return Ok(None);
        };
        if self.strategies[n].crashed() {
            self.delta.ignored = true;
            return Ok(None);
        }
        let b = self.create_block(n, BlockPayload::None, params.work_per_block)?;
        let actions = self.decide(n, Trigger::Mined(b), vec![Action::SetHead(b), Action::Publish(b)]);
        self.apply_actions(n, actions)?;
        if !scripted {
            let t = nakamoto::next_mining_time(self.now, self.power_fraction[n], &params, &mut self.rng_mining[n])
                .expect("miner has power");
            self.queue.schedule(
                t,
                EventKind::BlockMined {
                    node: NodeId(n as u32),
                    scripted: false,
                },
            )?;
        }
        Ok(Some(b))
    }

    fn apply_actions(&mut self, n: usize, actions: Vec<Action>) -> Result<(), SimError> {
        for a in actions {
            match a {
                Action::SetHead(b) => self.set_head(n, b)?,
                Action::Publish(b) => self.gossip_blocks(n, vec![b], None)?,
                Action::Relay { block, except } => self.gossip_blocks(n, vec![block], except)?,
                Action::Consensus(m) => self.send_consensus(n, m)?,
            }
        }
        Ok(())
    }

    fn set_head(&mut self, n: usize, new: BlockId) -> Result<(), SimError> {
        let old = self.nodes[n].head;
        if old == new {
            return Ok(());
        }
        if !self.txs.is_empty() {
            let cp = self.dag.common_prefix(old, new)?;
            for b in self.dag.segment(old, cp)? {
                for tx in &self.dag.get(b)?.txs {
                    self.nodes[n].mempool.exclude(&self.txs[tx.0 as usize]);
                }
            }
            for b in self.dag.segment(new, cp)? {
                for tx in &self.dag.get(b)?.txs {
                    self.nodes[n].mempool.include(&self.txs[tx.0 as usize]);
                }
            }
        }
        self.nodes[n].head = new;
        if self.delta.prev_head.is_none() {
            self.delta.prev_head = Some(old);
        }
        self.delta.head = Some(new);
        Ok(())
    }

    fn latency(&mut self, edge: usize) -> f64 {
        self.topo.sample_latency(edge, &mut self.rng_latency)
    }

    /// Sends blocks to gossip neighbors. In IBFT, validators learn blocks
    /// through consensus, so block gossip only reaches non-validators.
    fn gossip_blocks(&mut self, n: usize, blocks: Vec<BlockId>, except: Option<NodeId>) -> Result<(), SimError> {
        let is_ibft = self.ibft_params().is_some();
        let neighbors = self.topo.neighbors(NodeId(n as u32)).to_vec();
        for (nb, e) in neighbors {
            if Some(nb) == except || (is_ibft && self.keys[nb.index()].is_some()) {
                continue;
            }
            self.send_blocks(NodeId(n as u32), nb, e, blocks.clone())?;
        }
        Ok(())
    }

    fn send_blocks(&mut self, from: NodeId, to: NodeId, edge: usize, blocks: Vec<BlockId>) -> Result<(), SimError> {
        if self.topo.is_severed(edge) {
            self.delta.dropped += blocks.len() as u64;
            return Ok(());
        }
        for &b in &blocks {
            self.delta.add_send("block", Some(b), None, 1);
        }
        let t = self.now + self.latency(edge);
        self.queue
            .schedule(t, EventKind::BlockArrival { node: to, from, blocks })?;
        Ok(())
    }

    fn on_block_arrival(&mut self, n: usize, from: NodeId, blocks: Vec<BlockId>) -> Result<(), SimError> {
        if self.strategies[n].crashed() {
            self.delta.ignored = true;
            return Ok(());
        }
        for b in blocks {
            self.receive_block(n, b, Some(from))?;
        }
        Ok(())
    }

    fn receive_block(&mut self, n: usize, b: BlockId, from: Option<NodeId>) -> Result<(), SimError> {
        if self.nodes[n].knows(b) || self.nodes[n].is_buffered(b) {
            return Ok(());
        }
        let parent = self.dag.parent(b)?.expect("received blocks are not genesis");
        if !self.nodes[n].knows(parent) {
            self.nodes[n].buffer_orphan(b, parent);
            self.delta.buffered.push(b);
            return Ok(());
        }
        let mut stack = vec![b];
        while let Some(x) = stack.pop() {
            self.accept_block(n, x, from)?;
            stack.extend(self.nodes[n].take_orphans(x));
        }
        Ok(())
    }

    fn tie_switch_probability(&self, n: usize, b: BlockId) -> f64 {
        let creator = self.dag.get(b).ok().and_then(|blk| blk.creator);
        if let Some(c) = creator {
            if c.index() != n {
                let adv = self.strategies[c.index()].tie_advantage();
                if adv > 0.0 {
                    return adv;
                }
            }
        }
        match self.nakamoto_params().map(|p| p.tiebreak) {
            Some(Tiebreak::Uniform) => 0.5,
            _ => 0.0,
        }
    }

    fn accept_block(&mut self, n: usize, b: BlockId, from: Option<NodeId>) -> Result<(), SimError> {
        self.nodes[n].add_to_view(b);
        self.delta.added.push(b);
        let mut prescribed = vec![Action::Relay { block: b, except: from }];
        if let Some(params) = self.ibft_params() {
            let actions = self.decide(n, Trigger::Received { block: b, from }, prescribed);
            self.apply_actions(n, actions)?;
            return self.ibft_catch_up(n, b, &params);
        }
        let head = self.nodes[n].head;
        let p_tie = self.tie_switch_probability(n, b);
        if prefers(&self.dag, head, b, p_tie, &mut self.rng_tie)? {
            prescribed.insert(0, Action::SetHead(b));
        }
        let actions = self.decide(n, Trigger::Received { block: b, from }, prescribed);
        self.apply_actions(n, actions)
    }

    /// Finalizes sealed blocks between the node's head and `b`, lowest first.
    fn ibft_catch_up(&mut self, n: usize, b: BlockId, params: &IbftParams) -> Result<(), SimError> {
        let head = self.nodes[n].ibft.as_ref().expect("ibft node").head;
        if head == b || !self.dag.is_ancestor(head, b)? {
            return Ok(());
        }
        let mut path = self.dag.segment(b, head)?;
        path.reverse();
        for x in path {
            let Some((round, keys)) = self.seals.get(&x).cloned() else {
                break;
            };
            let out = self.ibft_step(n, IbftInput::Sealed { block: x, round, keys }, params);
            self.apply_ibft(n, out, params)?;
        }
        Ok(())
    }

    fn ibft_step(&mut self, n: usize, input: IbftInput, params: &IbftParams) -> Vec<IbftOutput> {
        let mut st = self.nodes[n].ibft.take().expect("ibft node");
        let out = {
            let node = &self.nodes[n];
            st.step(input, &self.dag, &|x| node.knows(x), params)
        };
        self.nodes[n].ibft = Some(st);
        out
    }

    fn apply_ibft(&mut self, n: usize, outputs: Vec<IbftOutput>, _params: &IbftParams) -> Result<(), SimError> {
        let node = NodeId(n as u32);
        let mut prescribed = Vec::new();
        for o in outputs {
            match o {
                IbftOutput::Send(m) => prescribed.push(Action::Consensus(m)),
                IbftOutput::Finalize { block, round, keys } => {
                    self.seals.entry(block).or_insert_with(|| (round, keys.clone()));
                    self.delta.finalized.push(Finalization { block, round, keys });
                    prescribed.push(Action::SetHead(block));
                    prescribed.push(Action::Publish(block));
                }
                IbftOutput::ArmTimeout { round, after } => {
                    self.queue
                        .schedule(self.now + after, EventKind::RoundTimeout { node, round })?;
                }
                IbftOutput::ArmProposal { round, after } => {
                    self.queue
                        .schedule(self.now + after, EventKind::ProposalDue { node, round })?;
                }
            }
        }
        if prescribed.is_empty() {
            return Ok(());
        }
        let actions = self.decide(n, Trigger::Protocol, prescribed);
        self.apply_actions(n, actions)
    }

    fn send_consensus(&mut self, n: usize, m: IbftMessage) -> Result<(), SimError> {
        let from = NodeId(n as u32);
        for to in self.key_holders.clone() {
            if to == from || to.0 == u32::MAX {
                continue;
            }
            let e = self.topo.edge_between(from, to).expect("validators form a clique");
            if self.topo.is_severed(e) {
                self.delta.dropped += 1;
                continue;
            }
            self.delta.add_send(m.kind.as_str(), m.block, Some(m.round), 1);
            let t = self.now + self.latency(e);
            self.queue
                .schedule(t, EventKind::ProtocolMsgArrival { node: to, from, msg: m })?;
        }
        Ok(())
    }

    fn on_protocol_msg(&mut self, n: usize, m: IbftMessage) -> Result<(), SimError> {
        if self.strategies[n].crashed() {
            self.delta.ignored = true;
            return Ok(());
        }
        if let (crate::protocols::ibft::MsgKind::Proposal, Some(b)) = (m.kind, m.block) {
            let parent = self.dag.parent(b)?.expect("proposals are not genesis");
            if self.nodes[n].knows(parent) && self.nodes[n].add_to_view(b) {
                self.delta.added.push(b);
            }
        }
        self.on_ibft_input(n, IbftInput::Message(m))
    }

    fn on_ibft_input(&mut self, n: usize, input: IbftInput) -> Result<(), SimError> {
        if self.strategies[n].crashed() {
            self.delta.ignored = true;
            return Ok(());
        }
        let params = self.ibft_params().expect("ibft event in ibft scenario");
        let out = self.ibft_step(n, input, &params);
        self.apply_ibft(n, out, &params)
    }

    fn on_proposal_due(&mut self, n: usize, round: u64) -> Result<Option<BlockId>, SimError> {
        if self.strategies[n].crashed() {
            self.delta.ignored = true;
            return Ok(None);
        }
        let params = self.ibft_params().expect("ibft event in ibft scenario");
        let st = self.nodes[n].ibft.as_ref().expect("ibft node");
        if !st.should_propose(round, &params) {
            return Ok(None);
        }
        let b = match st.locked {
            Some(b) => b,
            None => self.create_block(n, BlockPayload::Proposal { round }, 1.0)?,
        };
        let out = self.ibft_step(n, IbftInput::Propose { round, block: b }, &params);
        self.apply_ibft(n, out, &params)?;
        Ok(Some(b))
    }

    fn draw_fee(&mut self, n: usize) -> f64 {
        match self.cfg.workload.fee {
            FeeDistribution::Fixed { amount } => amount,
            FeeDistribution::Uniform { lo, hi } if hi > lo => self.rng_workload[n].random_range(lo..hi),
            FeeDistribution::Uniform { lo, .. } => lo,
        }
    }

    fn on_tx_created(&mut self, n: usize, fee: Option<f64>, scripted: bool) -> Result<(), SimError> {
        if self.strategies[n].crashed() {
            self.delta.ignored = true;
            return Ok(());
        }
        let fee = match fee {
            Some(f) => f,
            None => self.draw_fee(n),
        };
        let tx = Transaction {
            id: TxId(self.txs.len() as u64),
            created_at: self.now,
            fee,
            creator: NodeId(n as u32),
        };
        self.txs.push(tx.clone());
        self.nodes[n].mempool.learn(&tx);
        self.gossip_txs(n, vec![tx.id], None)?;
        self.delta.tx = Some(tx);
        if !scripted {
            let rate = self.cfg.workload.tx_rate;
            let dt = Exp::new(rate).expect("positive rate").sample(&mut self.rng_workload[n]);
            self.queue.schedule(
                self.now + dt,
                EventKind::TxCreated {
                    node: NodeId(n as u32),
                    fee: None,
                    scripted: false,
                },
            )?;
        }
        Ok(())
    }

    fn on_tx_arrival(&mut self, n: usize, from: NodeId, txs: Vec<TxId>) -> Result<(), SimError> {
        if self.strategies[n].crashed() {
            self.delta.ignored = true;
            return Ok(());
        }
        let fresh: Vec<TxId> = txs
            .into_iter()
            .filter(|id| self.nodes[n].mempool.learn(&self.txs[id.0 as usize]))
            .collect();
        if !fresh.is_empty() {
            self.gossip_txs(n, fresh.clone(), Some(from))?;
        }
        self.delta.txs = fresh;
        Ok(())
    }

    fn gossip_txs(&mut self, n: usize, txs: Vec<TxId>, except: Option<NodeId>) -> Result<(), SimError> {
        let from = NodeId(n as u32);
        for (nb, e) in self.topo.neighbors(from).to_vec() {
            if Some(nb) == except {
                continue;
            }
            if self.topo.is_severed(e) {
                self.delta.dropped += txs.len() as u64;
                continue;
            }
            self.delta.add_send("tx", None, None, txs.len() as u64);
            let t = self.now + self.latency(e);
            self.queue.schedule(
                t,
                EventKind::TxArrival {
                    node: nb,
                    from,
                    txs: txs.clone(),
                },
            )?;
        }
        Ok(())
    }

    fn on_partition(&mut self, index: usize, active: bool) -> Result<(), SimError> {
        let flipped = self.topo.set_partition(index, active);
        self.delta.partition = Some(PartitionChange {
            index,
            active,
            edges: flipped
                .iter()
                .map(|&e| {
                    let edge = self.topo.edge(e);
                    [edge.a.0, edge.b.0]
                })
                .collect(),
        });
        if !active {
            for e in flipped {
                let (a, b) = (self.topo.edge(e).a, self.topo.edge(e).b);
                self.sync(a, b, e)?;
                self.sync(b, a, e)?;
            }
        }
        Ok(())
    }

    /// On reconnection each side sends the blocks and transactions the
    /// other side lacks.
    fn sync(&mut self, from: NodeId, to: NodeId, edge: usize) -> Result<(), SimError> {
        if self.strategies[from.index()].crashed() {
            return Ok(());
        }
        let (src, dst) = (&self.nodes[from.index()], &self.nodes[to.index()]);
        let mut blocks: Vec<BlockId> = src.seen_order().iter().copied().filter(|b| !dst.knows(*b)).collect();
        let dag = &self.dag;
        blocks.sort_by_key(|b| (dag.height(*b).expect("block in dag"), *b));
        let dst_txs: HashSet<TxId> = dst.mempool.known_sorted().into_iter().collect();
        let txs: Vec<TxId> = src
            .mempool
            .known_sorted()
            .into_iter()
            .filter(|t| !dst_txs.contains(t))
            .collect();
        if !blocks.is_empty() {
            self.send_blocks(from, to, edge, blocks)?;
        }
        if !txs.is_empty() {
            self.delta.add_send("tx", None, None, txs.len() as u64);
            let t = self.now + self.latency(edge);
            self.queue.schedule(t, EventKind::TxArrival { node: to, from, txs })?;
        }
        Ok(())
    }

    fn on_wake(&mut self, n: usize) -> Result<(), SimError> {
        if self.strategies[n].crashed() {
            self.delta.ignored = true;
            return Ok(());
        }
        let actions = self.decide(n, Trigger::Wake, Vec::new());
        self.apply_actions(n, actions)
    }
}

/// Per-node head history reconstructed from a record stream:
/// `(time, head)` pairs starting with genesis at time 0.
pub fn head_histories(trace: &Trace) -> BTreeMap<NodeId, Vec<(f64, BlockId)>> {
    let n = trace.scenario().node_count();
    let mut out: BTreeMap<NodeId, Vec<(f64, BlockId)>> = (0..n)
        .map(|i| (NodeId(i as u32), vec![(0.0, BlockId::GENESIS)]))
        .collect();
    for r in &trace.records {
        if let (Some(node), Some(h)) = (r.node, r.extra.head) {
            out.entry(node).or_default().push((r.t, h));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{LatencyModel, WorkloadConfig};

    #[test]
    fn same_seed_same_trace() {
        let cfg = ScenarioConfig::nakamoto(&[1.0, 2.0, 3.0])
            .with_latency(LatencyModel::Exponential { mean: 5.0 })
            .with_workload(WorkloadConfig {
                tx_rate: 0.01,
                ..WorkloadConfig::default()
            });
        let a = run(&cfg, 20_000.0, 9).unwrap();
        let b = run(&cfg, 20_000.0, 9).unwrap();
        assert_eq!(a.checksum(), b.checksum());
        let c = run(&cfg, 20_000.0, 10).unwrap();
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn horizon_zero_has_only_initial_snapshot() {
        let cfg = ScenarioConfig::nakamoto(&[1.0, 1.0]);
        let t = run(&cfg, 0.0, 1).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].kind, RecordKind::Snapshot);
    }

    #[test]
    fn records_sorted_by_time() {
        let mut cfg = ScenarioConfig::nakamoto(&[1.0, 1.0, 1.0]).with_latency(LatencyModel::Exponential { mean: 30.0 });
        cfg.snapshot_interval = Some(1000.0);
        let t = run(&cfg, 10_000.0, 3).unwrap();
        assert!(t.records.windows(2).all(|w| w[0].t <= w[1].t));
        let snaps = t.records.iter().filter(|r| r.kind == RecordKind::Snapshot).count();
        assert_eq!(snaps, 11);
    }

    #[test]
    fn views_grow_and_heads_stay_in_view() {
        let cfg = ScenarioConfig::nakamoto(&[1.0, 1.0, 2.0]).with_latency(LatencyModel::Exponential { mean: 60.0 });
        let mut sim = Simulation::new(&cfg.with_horizon(30_000.0), 4).unwrap();
        let mut sizes = [1; 3];
        for step in 1..=30 {
            sim.run_until(step as f64 * 1000.0).unwrap();
            for (i, n) in sim.nodes().iter().enumerate() {
                assert!(n.view_len() >= sizes[i]);
                sizes[i] = n.view_len();
                assert!(n.knows(n.head));
            }
        }
    }
}
