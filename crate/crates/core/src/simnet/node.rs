//! Per-node state: local view, head, mempool and resources.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, HashMap, HashSet};

use super::{NodeSnapshot, ResourceVector};
use crate::chain::{BlockId, NodeId, Transaction, TxId};
use crate::protocols::ibft::IbftNode;

/// Fee ordered by `f64::total_cmp`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct FeeKey(f64);

impl Eq for FeeKey {}

impl Ord for FeeKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for FeeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Transactions a node knows about, split into those on its head chain and
/// those still pending (ordered by fee, highest first, then id).
#[derive(Debug, Clone, Default)]
pub struct Mempool {
    fees: HashMap<TxId, f64>,
    pending: BTreeSet<(Reverse<FeeKey>, TxId)>,
    included: HashSet<TxId>,
}

impl Mempool {
    pub fn knows(&self, id: TxId) -> bool {
        self.fees.contains_key(&id)
    }

    /// Records `tx`; returns false if it was already known.
    pub fn learn(&mut self, tx: &Transaction) -> bool {
        if self.fees.insert(tx.id, tx.fee).is_some() {
            return false;
        }
        if !self.included.contains(&tx.id) {
            self.pending.insert((Reverse(FeeKey(tx.fee)), tx.id));
        }
        true
    }

    /// `tx` is now on the head chain.
    pub fn include(&mut self, tx: &Transaction) {
        self.learn(tx);
        if self.included.insert(tx.id) {
            self.pending.remove(&(Reverse(FeeKey(tx.fee)), tx.id));
        }
    }

    /// `tx` left the head chain in a reorg; it becomes pending again.
    pub fn exclude(&mut self, tx: &Transaction) {
        if self.included.remove(&tx.id) {
            self.pending.insert((Reverse(FeeKey(tx.fee)), tx.id));
        }
    }

    pub fn is_included(&self, id: TxId) -> bool {
        self.included.contains(&id)
    }

    /// Pending ids, best fee first.
    pub fn pending(&self) -> impl Iterator<Item = TxId> + '_ {
        self.pending.iter().map(|(_, id)| *id)
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Known ids in ascending order.
    pub fn known_sorted(&self) -> Vec<TxId> {
        let mut v: Vec<TxId> = self.fees.keys().copied().collect();
        v.sort();
        v
    }
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub head: BlockId,
    pub mempool: Mempool,
    pub resources: ResourceVector,
    pub strategy: String,
    pub ibft: Option<IbftNode>,
    view: HashSet<BlockId>,
    seen: Vec<BlockId>,
    /// Blocks waiting for a missing parent, keyed by that parent.
    orphans: HashMap<BlockId, Vec<BlockId>>,
    orphan_ids: HashSet<BlockId>,
}

impl NodeState {
    pub fn new(id: NodeId, resources: ResourceVector, strategy: String, ibft: Option<IbftNode>) -> Self {
        NodeState {
            id,
            head: BlockId::GENESIS,
            mempool: Mempool::default(),
            resources,
            strategy,
            ibft,
            view: HashSet::from([BlockId::GENESIS]),
            seen: vec![BlockId::GENESIS],
            orphans: HashMap::new(),
            orphan_ids: HashSet::new(),
        }
    }

    pub fn knows(&self, b: BlockId) -> bool {
        self.view.contains(&b)
    }

    /// Adds `b` to the view; false if already present.
    pub fn add_to_view(&mut self, b: BlockId) -> bool {
        if self.view.insert(b) {
            self.seen.push(b);
            true
        } else {
            false
        }
    }

    /// View in the order blocks were first seen.
    pub fn seen_order(&self) -> &[BlockId] {
        &self.seen
    }

    pub fn view_len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_buffered(&self, b: BlockId) -> bool {
        self.orphan_ids.contains(&b)
    }

    pub fn buffer_orphan(&mut self, b: BlockId, missing_parent: BlockId) {
        if self.orphan_ids.insert(b) {
            self.orphans.entry(missing_parent).or_default().push(b);
        }
    }

    /// Buffered blocks whose parent is `parent`.
    pub fn take_orphans(&mut self, parent: BlockId) -> Vec<BlockId> {
        let v = self.orphans.remove(&parent).unwrap_or_default();
        for b in &v {
            self.orphan_ids.remove(b);
        }
        v
    }

    pub fn snapshot(&self) -> NodeSnapshot {
        let mut view = self.seen.clone();
        view.sort();
        let mut mempool: Vec<TxId> = self.mempool.pending().collect();
        mempool.sort();
        NodeSnapshot {
            id: self.id,
            head: self.head,
            view,
            mempool,
            resources: self.resources.clone(),
            strategy: self.strategy.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx(id: u64, fee: f64) -> Transaction {
        Transaction {
            id: TxId(id),
            created_at: 0.0,
            fee,
            creator: NodeId(0),
        }
    }

    #[test]
    fn mempool_orders_by_fee_then_id() {
        let mut m = Mempool::default();
        for t in [tx(1, 1.0), tx(2, 5.0), tx(3, 1.0), tx(4, 3.0)] {
            assert!(m.learn(&t));
        }
        assert!(!m.learn(&tx(2, 5.0)));
        assert_eq!(m.pending().collect::<Vec<_>>(), [2, 4, 1, 3].map(TxId));
    }

    #[test]
    fn reorg_readds_transactions() {
        let mut m = Mempool::default();
        let t = tx(7, 2.0);
        m.include(&t);
        assert!(m.knows(TxId(7)) && m.pending_len() == 0);
        m.exclude(&t);
        assert_eq!(m.pending().collect::<Vec<_>>(), vec![TxId(7)]);
        m.include(&t);
        assert_eq!(m.pending_len(), 0);
    }

    #[test]
    fn orphans_released_by_parent() {
        let mut n = NodeState::new(NodeId(0), Default::default(), "honest".into(), None);
        n.buffer_orphan(BlockId(5), BlockId(4));
        n.buffer_orphan(BlockId(5), BlockId(4));
        assert!(n.is_buffered(BlockId(5)));
        assert_eq!(n.take_orphans(BlockId(4)), vec![BlockId(5)]);
        assert!(!n.is_buffered(BlockId(5)));
        assert!(n.add_to_view(BlockId(4)));
        assert!(!n.add_to_view(BlockId(4)));
        assert_eq!(n.seen_order(), &[BlockId(0), BlockId(4)]);
    }
}
