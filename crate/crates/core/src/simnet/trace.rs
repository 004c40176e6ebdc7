//! Run traces and their JSON-lines encoding.
//!
//! Line 1 is a [`TraceHeader`] embedding the scenario and seed; every
//! further line is one [`TraceRecord`]: a processed event plus the state
//! changes it caused. The file alone is enough to rebuild the block DAG,
//! every node's head history and all message counts.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::SystemState;
use crate::chain::{Block, BlockId, NodeId, Transaction, TxId};
use crate::protocols::ibft::IbftMessage;
use crate::scenario::ScenarioConfig;

pub const TRACE_SCHEMA: &str = "presto-trace/1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty trace file")]
    Empty,
    #[error("unsupported trace schema {0:?}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub seed: u64,
    pub scenario_digest: String,
    pub scenario: ScenarioConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Snapshot,
    BlockMined,
    BlockArrival,
    TxCreated,
    TxArrival,
    ProtocolMsg,
    RoundTimeout,
    ProposalDue,
    Partition,
    StrategyWake,
}

/// Messages of one kind sent during an event, grouped by the block or
/// round they concern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SendCount {
    pub kind: String,
    pub count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finalization {
    pub block: BlockId,
    pub round: u64,
    pub keys: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionChange {
    pub index: usize,
    pub active: bool,
    /// Edges whose state flipped, as node pairs.
    pub edges: Vec<[u32; 2]>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero(n: &u64) -> bool {
    *n == 0
}

/// State changes caused by one event.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extra {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<NodeId>,
    /// Block created during the event.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<Block>,
    /// Blocks that entered the node's view.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub added: Vec<BlockId>,
    /// Blocks held back until their parent arrives.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buffered: Vec<BlockId>,
    /// New head, when it changed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<BlockId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prev_head: Option<BlockId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx: Option<Transaction>,
    /// Transactions the node learned.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub txs: Vec<TxId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msg: Option<IbftMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub finalized: Vec<Finalization>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sends: Vec<SendCount>,
    /// Messages lost on severed edges.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub dropped: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionChange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub heads: Vec<BlockId>,
    /// The node is crashed and did nothing.
    #[serde(default, skip_serializing_if = "is_false")]
    pub ignored: bool,
}

impl Extra {
    pub fn add_send(&mut self, kind: &str, block: Option<BlockId>, round: Option<u64>, count: u64) {
        if let Some(s) = self
            .sends
            .iter_mut()
            .find(|s| s.kind == kind && s.block == block && s.round == round)
        {
            s.count += count;
        } else {
            self.sends.push(SendCount {
                kind: kind.to_string(),
                count,
                block,
                round,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub seq: u64,
    pub kind: RecordKind,
    pub node: Option<NodeId>,
    pub block: Option<BlockId>,
    pub parent: Option<BlockId>,
    pub extra: Extra,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
    /// Full state at the horizon; only available for in-memory runs.
    pub final_state: Option<SystemState>,
}

impl Trace {
    pub fn scenario(&self) -> &ScenarioConfig {
        &self.header.scenario
    }

    pub fn horizon(&self) -> f64 {
        self.header.scenario.horizon
    }

    pub fn seed(&self) -> u64 {
        self.header.seed
    }

    /// The encoded lines, header first, without newlines.
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.records.len() + 1);
        out.push(serde_json::to_string(&self.header).expect("header serializes"));
        out.extend(
            self.records
                .iter()
                .map(|r| serde_json::to_string(r).expect("record serializes")),
        );
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for line in self.lines() {
            w.write_all(line.as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn write_file(&self, path: &Path) -> std::io::Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_jsonl(std::io::BufWriter::new(f))
    }

    pub fn read_jsonl<R: Read>(r: R) -> Result<Self, TraceError> {
        let mut lines = BufReader::new(r).lines().enumerate();
        let (_, first) = lines.next().ok_or(TraceError::Empty)?;
        let header: TraceHeader = serde_json::from_str(&first?).map_err(|e| TraceError::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        if header.schema != TRACE_SCHEMA {
            return Err(TraceError::Schema(header.schema));
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line).map_err(|e| TraceError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?);
        }
        Ok(Trace {
            header,
            records,
            final_state: None,
        })
    }

    pub fn read_file(path: &Path) -> Result<Self, TraceError> {
        Self::read_jsonl(std::fs::File::open(path)?)
    }

    /// Hex SHA-256 over the encoded lines.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for line in self.lines() {
            h.update(line.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

/// Hex SHA-256 of a file's bytes, for comparing stored traces.
pub fn file_checksum(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}
