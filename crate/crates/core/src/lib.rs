//! Simulation and measurement of chain-based consensus protocols.
//!
//! A [`scenario::ScenarioConfig`] describes a network, a protocol and a
//! strategy profile. [`simnet::run`] turns it into a deterministic
//! [`simnet::Trace`], and the [`metrics`] module evaluates safety, liveness,
//! decentralization, efficiency and incentive properties on traces.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cli;
pub mod metrics;
pub mod protocols;
pub mod scenario;
pub mod simnet;
pub mod strategies;

pub use chain::{Block, BlockDag, BlockId, NodeId, Transaction, TxId};
pub use scenario::ScenarioConfig;
pub use simnet::{run, Trace};
