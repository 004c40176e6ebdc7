//! Blocks, the append-only block DAG and ancestry queries.
//!
//! Every block points at exactly one parent, so the DAG is a tree rooted at
//! genesis. Heights and cumulative work are cached on insertion; since a
//! block can only be added after its parent, both are fixed forever.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a block. Genesis is always `BlockId(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(pub u64);

impl BlockId {
    pub const GENESIS: BlockId = BlockId(0);
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B{}", self.0)
    }
}

/// Dense node index, `0..N` within one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxId(pub u64);

/// A fee-carrying transfer record. Validity is a protocol concern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxId,
    pub created_at: f64,
    pub fee: f64,
    pub creator: NodeId,
}

/// Protocol data carried by a block outside its transaction list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockPayload {
    #[default]
    None,
    /// Consensus round in which the block was proposed.
    Proposal { round: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub parent: Option<BlockId>,
    pub timestamp: f64,
    pub work: f64,
    pub txs: Vec<TxId>,
    pub creator: Option<NodeId>,
    #[serde(default)]
    pub payload: BlockPayload,
}

impl Block {
    pub fn genesis() -> Self {
        Block {
            id: BlockId::GENESIS,
            parent: None,
            timestamp: 0.0,
            work: 0.0,
            txs: Vec::new(),
            creator: None,
            payload: BlockPayload::None,
        }
    }

    pub fn new(id: BlockId, parent: BlockId, timestamp: f64, work: f64, creator: NodeId) -> Self {
        Block {
            id,
            parent: Some(parent),
            timestamp,
            work,
            txs: Vec::new(),
            creator: Some(creator),
            payload: BlockPayload::None,
        }
    }

    pub fn with_txs(mut self, txs: Vec<TxId>) -> Self {
        self.txs = txs;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("block {0} already present")]
    DuplicateId(BlockId),
    #[error("parent {parent} of block {block} is not in the dag")]
    MissingParent { block: BlockId, parent: BlockId },
    #[error("unknown block {0}")]
    UnknownBlock(BlockId),
    #[error("invalid genesis: {0}")]
    InvalidGenesis(&'static str),
}

/// A tip-to-genesis path. `ids[0]` is the tip, the last element is genesis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub ids: Vec<BlockId>,
}

impl Chain {
    pub fn tip(&self) -> BlockId {
        self.ids[0]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: BlockId) -> bool {
        self.ids.contains(&id)
    }
}

#[derive(Debug, Clone)]
struct Entry {
    block: Block,
    height: u64,
    cumulative_work: f64,
}

/// Union of every block created in a run, across all node views.
#[derive(Debug, Clone, Default)]
pub struct BlockDag {
    entries: HashMap<BlockId, Entry>,
    order: Vec<BlockId>,
}

impl BlockDag {
    pub fn new() -> Self {
        Self::default()
    }

    /// A dag holding only the standard genesis block.
    pub fn with_genesis() -> Self {
        let mut dag = Self::new();
        dag.add_block(Block::genesis()).expect("empty dag accepts genesis");
        dag
    }

    pub fn genesis(&self) -> BlockId {
        BlockId::GENESIS
    }

    pub fn add_block(&mut self, block: Block) -> Result<(), ChainError> {
        if self.entries.contains_key(&block.id) {
            return Err(ChainError::DuplicateId(block.id));
        }
        let (height, cumulative_work) = match block.parent {
            None => {
                if block.id != BlockId::GENESIS {
                    return Err(ChainError::InvalidGenesis("only block 0 may lack a parent"));
                }
                if !self.entries.is_empty() {
                    return Err(ChainError::InvalidGenesis("genesis must be the first block"));
                }
                (0, block.work)
            }
            Some(parent) => {
                if block.id == BlockId::GENESIS {
                    return Err(ChainError::InvalidGenesis("genesis cannot have a parent"));
                }
                let p = self.entries.get(&parent).ok_or(ChainError::MissingParent {
                    block: block.id,
                    parent,
                })?;
                (p.height + 1, p.cumulative_work + block.work)
            }
        };
        self.order.push(block.id);
        self.entries.insert(
            block.id,
            Entry {
                block,
                height,
                cumulative_work,
            },
        );
        Ok(())
    }

    pub fn contains(&self, id: BlockId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn entry(&self, id: BlockId) -> Result<&Entry, ChainError> {
        self.entries.get(&id).ok_or(ChainError::UnknownBlock(id))
    }

    pub fn get(&self, id: BlockId) -> Result<&Block, ChainError> {
        self.entry(id).map(|e| &e.block)
    }

    pub fn parent(&self, id: BlockId) -> Result<Option<BlockId>, ChainError> {
        self.entry(id).map(|e| e.block.parent)
    }

    /// Distance from genesis; genesis has height 0.
    pub fn height(&self, id: BlockId) -> Result<u64, ChainError> {
        self.entry(id).map(|e| e.height)
    }

    /// Blocks in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &Block> + '_ {
        self.order.iter().map(move |id| &self.entries[id].block)
    }

    pub fn ids(&self) -> &[BlockId] {
        &self.order
    }

    pub fn chain_of(&self, id: BlockId) -> Result<Chain, ChainError> {
        let mut ids = Vec::with_capacity(self.height(id)? as usize + 1);
        let mut cur = Some(id);
        while let Some(c) = cur {
            ids.push(c);
            cur = self.entry(c)?.block.parent;
        }
        Ok(Chain { ids })
    }

    /// The ancestor of `id` at `height`, if `id` is at least that high.
    pub fn ancestor_at(&self, id: BlockId, height: u64) -> Result<Option<BlockId>, ChainError> {
        let mut e = self.entry(id)?;
        if e.height < height {
            return Ok(None);
        }
        while e.height > height {
            let p = e.block.parent.expect("non-genesis block has a parent");
            e = self.entry(p)?;
        }
        Ok(Some(e.block.id))
    }

    /// True iff `a` lies on `chain_of(b)`. Reflexive.
    pub fn is_ancestor(&self, a: BlockId, b: BlockId) -> Result<bool, ChainError> {
        let ha = self.height(a)?;
        Ok(self.ancestor_at(b, ha)? == Some(a))
    }

    pub fn incompatible(&self, a: BlockId, b: BlockId) -> Result<bool, ChainError> {
        Ok(!self.is_ancestor(a, b)? && !self.is_ancestor(b, a)?)
    }

    /// Sum of work over `chain_of(id)`.
    pub fn cumulative_work(&self, id: BlockId) -> Result<f64, ChainError> {
        self.entry(id).map(|e| e.cumulative_work)
    }

    /// Deepest block contained in both `chain_of(a)` and `chain_of(b)`.
    pub fn common_prefix(&self, a: BlockId, b: BlockId) -> Result<BlockId, ChainError> {
        let (ha, hb) = (self.height(a)?, self.height(b)?);
        let h = ha.min(hb);
        let mut x = self.ancestor_at(a, h)?.expect("height checked");
        let mut y = self.ancestor_at(b, h)?.expect("height checked");
        while x != y {
            x = self.entry(x)?.block.parent.expect("distinct blocks above genesis");
            y = self.entry(y)?.block.parent.expect("distinct blocks above genesis");
        }
        Ok(x)
    }

    /// Blocks on `chain_of(from)` strictly above `stop`, tip first.
    pub fn segment(&self, from: BlockId, stop: BlockId) -> Result<Vec<BlockId>, ChainError> {
        let hs = self.height(stop)?;
        let mut out = Vec::new();
        let mut cur = from;
        while self.height(cur)? > hs {
            out.push(cur);
            cur = self.entry(cur)?.block.parent.expect("above genesis");
        }
        Ok(out)
    }
}
