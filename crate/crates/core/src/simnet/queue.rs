//! Deterministic discrete-event queue ordered by `(time, seq)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SimError;
use crate::chain::{BlockId, NodeId, TxId};
use crate::protocols::ibft::IbftMessage;

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// A node's mining timer fired (`scripted` events do not re-arm).
    BlockMined {
        node: NodeId,
        scripted: bool,
    },
    /// Blocks reach `node`; several at once for partition-heal sync.
    BlockArrival {
        node: NodeId,
        from: NodeId,
        blocks: Vec<BlockId>,
    },
    /// `node` submits a transaction; `fee` is drawn when absent.
    TxCreated {
        node: NodeId,
        fee: Option<f64>,
        scripted: bool,
    },
    TxArrival {
        node: NodeId,
        from: NodeId,
        txs: Vec<TxId>,
    },
    ProtocolMsgArrival {
        node: NodeId,
        from: NodeId,
        msg: IbftMessage,
    },
    RoundTimeout {
        node: NodeId,
        round: u64,
    },
    /// The proposer's block period for `round` has elapsed.
    ProposalDue {
        node: NodeId,
        round: u64,
    },
    PartitionChange {
        index: usize,
        active: bool,
    },
    StrategyWake {
        node: NodeId,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::BlockMined { .. } => "block_mined",
            EventKind::BlockArrival { .. } => "block_arrival",
            EventKind::TxCreated { .. } => "tx_created",
            EventKind::TxArrival { .. } => "tx_arrival",
            EventKind::ProtocolMsgArrival { .. } => "protocol_msg",
            EventKind::RoundTimeout { .. } => "round_timeout",
            EventKind::ProposalDue { .. } => "proposal_due",
            EventKind::PartitionChange { .. } => "partition",
            EventKind::StrategyWake { .. } => "strategy_wake",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    clock: f64,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current simulation time: the time of the last popped event.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Next sequence number; later calls always return larger numbers.
    pub fn alloc_seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    /// Schedules `kind` at `time` with a fresh sequence number.
    pub fn schedule(&mut self, time: f64, kind: EventKind) -> Result<u64, SimError> {
        let seq = self.alloc_seq();
        self.push(Event { time, seq, kind })?;
        Ok(seq)
    }

    /// Inserts an event with a caller-chosen sequence number.
    pub fn push(&mut self, event: Event) -> Result<(), SimError> {
        if event.time.is_nan() || event.time < self.clock {
            return Err(SimError::TimeInPast {
                time: event.time,
                clock: self.clock,
            });
        }
        self.next_seq = self.next_seq.max(event.seq + 1);
        self.heap.push(event);
        Ok(())
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    /// Removes the earliest event and advances the clock to its time.
    pub fn pop(&mut self) -> Option<Event> {
        let e = self.heap.pop()?;
        self.clock = e.time;
        Some(e)
    }

    /// Moves the clock forward without popping (used at the horizon).
    pub fn advance_to(&mut self, time: f64) {
        if time > self.clock {
            self.clock = time;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wake(n: u32) -> EventKind {
        EventKind::StrategyWake { node: NodeId(n) }
    }

    #[test]
    fn ties_break_by_seq() {
        let mut q = EventQueue::new();
        q.push(Event {
            time: 10.0,
            seq: 9,
            kind: wake(1),
        })
        .unwrap();
        q.push(Event {
            time: 10.0,
            seq: 5,
            kind: wake(2),
        })
        .unwrap();
        q.push(Event {
            time: 3.0,
            seq: 12,
            kind: wake(3),
        })
        .unwrap();
        let order: Vec<u64> = std::iter::from_fn(|| q.pop()).map(|e| e.seq).collect();
        assert_eq!(order, vec![12, 5, 9]);
    }

    #[test]
    fn past_events_rejected() {
        let mut q = EventQueue::new();
        q.schedule(5.0, wake(0)).unwrap();
        q.pop();
        assert!(matches!(q.schedule(4.0, wake(0)), Err(SimError::TimeInPast { .. })));
        assert!(q.schedule(5.0, wake(0)).is_ok());
        assert!(q.schedule(f64::NAN, wake(0)).is_err());
    }

    #[test]
    fn seqs_increase() {
        let mut q = EventQueue::new();
        let a = q.schedule(1.0, wake(0)).unwrap();
        q.push(Event {
            time: 1.0,
            seq: 40,
            kind: wake(0),
        })
        .unwrap();
        let b = q.schedule(1.0, wake(0)).unwrap();
        assert!(a < 40 && b > 40);
    }
}
