//! Scenario configuration: protocol parameters, network, resources, strategy
//! profile, workload, utility model and scripted injections.
//!
//! Configs are plain serde structs with `deny_unknown_fields`, loaded from
//! TOML or JSON. [`ScenarioConfig::validate`] enforces the cross-field rules
//! and [`ScenarioConfig::digest`] pins the exact config used for a run.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chain::NodeId;
use crate::protocols::ibft::IbftParams;
use crate::protocols::nakamoto::NakamotoParams;
use crate::protocols::FinalityRule;
use crate::strategies::utility::UtilityModel;
use crate::strategies::StrategySpec;

pub const SCENARIO_SCHEMA: &str = "presto-scenario/1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

fn default_schema() -> String {
    SCENARIO_SCHEMA.to_string()
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    #[serde(default)]
    pub name: String,
    pub horizon: f64,
    /// Node whose finalized head-chain is the reference chain for rewards
    /// and throughput. Defaults to the lowest-index honest node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observer: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_interval: Option<f64>,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub resources: ResourceConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strategies: Vec<StrategyAssignment>,
    #[serde(default)]
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub utility: UtilityModel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub script: Vec<ScriptedEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProtocolConfig {
    Nakamoto(NakamotoParams),
    Ibft(IbftParams),
}

impl ProtocolConfig {
    pub fn finality_rule(&self) -> FinalityRule {
        match self {
            ProtocolConfig::Nakamoto(p) => FinalityRule::KConfirmations { k: p.confirmations },
            ProtocolConfig::Ibft(p) => FinalityRule::QuorumCommit { quorum: p.quorum() },
        }
    }

    pub fn block_reward(&self) -> f64 {
        match self {
            ProtocolConfig::Nakamoto(p) => p.block_reward,
            ProtocolConfig::Ibft(p) => p.block_reward,
        }
    }

    pub fn max_txs_per_block(&self) -> usize {
        match self {
            ProtocolConfig::Nakamoto(p) => p.max_txs_per_block,
            ProtocolConfig::Ibft(p) => p.max_txs_per_block,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProtocolConfig::Nakamoto(_) => "nakamoto",
            ProtocolConfig::Ibft(_) => "ibft",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatencyModel {
    Deterministic { delay: f64 },
    Exponential { mean: f64 },
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::Deterministic { delay: 1.0 }
    }
}

impl LatencyModel {
    fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            LatencyModel::Deterministic { delay } if !(delay >= 0.0 && delay.is_finite()) => {
                invalid(format!("deterministic latency must be >= 0, got {delay}"))
            }
            LatencyModel::Exponential { mean } if !(mean > 0.0 && mean.is_finite()) => {
                invalid(format!("exponential latency mean must be > 0, got {mean}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyKind {
    #[default]
    FullMesh,
    Line,
    Ring,
    Star {
        #[serde(default)]
        center: u32,
    },
    /// Only the edges listed under `network.edges`.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub a: u32,
    pub b: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencyModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub start: f64,
    pub end: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<[u32; 2]>,
    /// Sever every edge between these nodes and the rest of the network.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub isolate: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Node count. When absent: IBFT uses `k`, Nakamoto the length of
    /// `resources.power`, otherwise 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub topology: TopologyKind,
    #[serde(default)]
    pub latency: LatencyModel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partitions: Vec<PartitionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceConfig {
    /// Processing power per node. Missing entries default to 1.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub power: Vec<f64>,
    /// Multiplier applied to every power amount.
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bandwidth: Vec<f64>,
    /// Authority key held by each node (IBFT). Defaults to key `i` for
    /// node `i < k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keys: Option<Vec<Option<u32>>>,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        ResourceConfig {
            power: Vec::new(),
            scale: 1.0,
            bandwidth: Vec::new(),
            keys: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyAssignment {
    pub node: u32,
    pub strategy: StrategySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeeDistribution {
    Fixed { amount: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Default for FeeDistribution {
    fn default() -> Self {
        FeeDistribution::Fixed { amount: 0.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    /// Poisson transaction arrival rate per submitting node (tx/s).
    #[serde(default)]
    pub tx_rate: f64,
    #[serde(default)]
    pub fee: FeeDistribution,
    /// Transactions each submitting node creates at t = 0.
    #[serde(default)]
    pub backlog: usize,
    /// Submitting nodes; all non-crashed nodes when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitters: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptedEvent {
    /// The node creates a block on its current head.
    Mine { at: f64, node: u32 },
    /// The node submits a transaction.
    Tx {
        at: f64,
        node: u32,
        #[serde(default)]
        fee: f64,
    },
    /// Wakes the node's strategy (e.g. releases a private chain).
    Wake { at: f64, node: u32 },
}

impl ScriptedEvent {
    pub fn at(&self) -> f64 {
        match *self {
            ScriptedEvent::Mine { at, .. } | ScriptedEvent::Tx { at, .. } | ScriptedEvent::Wake { at, .. } => at,
        }
    }

    pub fn node(&self) -> u32 {
        match *self {
            ScriptedEvent::Mine { node, .. } | ScriptedEvent::Tx { node, .. } | ScriptedEvent::Wake { node, .. } => {
                node
            }
        }
    }
}

impl ScenarioConfig {
    /// Honest Nakamoto network, one node per entry of `power`, full mesh
    /// with 1s deterministic latency.
    pub fn nakamoto(power: &[f64]) -> Self {
        ScenarioConfig {
            schema: default_schema(),
            name: String::new(),
            horizon: 86_400.0,
            observer: None,
            snapshot_interval: None,
            protocol: ProtocolConfig::Nakamoto(NakamotoParams::default()),
            network: NetworkConfig::default(),
            resources: ResourceConfig {
                power: power.to_vec(),
                ..ResourceConfig::default()
            },
            strategies: Vec::new(),
            workload: WorkloadConfig::default(),
            utility: UtilityModel::default(),
            script: Vec::new(),
        }
    }

    /// Honest IBFT network of `k` keyed validators on a full mesh.
    pub fn ibft(k: usize) -> Self {
        ScenarioConfig {
            protocol: ProtocolConfig::Ibft(IbftParams {
                k,
                ..IbftParams::default()
            }),
            horizon: 600.0,
            network: NetworkConfig {
                latency: LatencyModel::Deterministic { delay: 0.1 },
                ..NetworkConfig::default()
            },
            ..Self::nakamoto(&[])
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_latency(mut self, latency: LatencyModel) -> Self {
        self.network.latency = latency;
        self
    }

    pub fn with_topology(mut self, topology: TopologyKind) -> Self {
        self.network.topology = topology;
        self
    }

    pub fn with_nodes(mut self, n: usize) -> Self {
        self.network.nodes = Some(n);
        self
    }

    pub fn with_strategy(mut self, node: u32, strategy: StrategySpec) -> Self {
        self.strategies.retain(|a| a.node != node);
        self.strategies.push(StrategyAssignment { node, strategy });
        self.strategies.sort_by_key(|a| a.node);
        self
    }

    pub fn with_workload(mut self, workload: WorkloadConfig) -> Self {
        self.workload = workload;
        self
    }

    pub fn with_utility(mut self, utility: UtilityModel) -> Self {
        self.utility = utility;
        self
    }

    pub fn with_observer(mut self, node: u32) -> Self {
        self.observer = Some(node);
        self
    }

    pub fn nakamoto_params_mut(&mut self) -> Option<&mut NakamotoParams> {
        match &mut self.protocol {
            ProtocolConfig::Nakamoto(p) => Some(p),
            _ => None,
        }
    }

    pub fn ibft_params_mut(&mut self) -> Option<&mut IbftParams> {
        match &mut self.protocol {
            ProtocolConfig::Ibft(p) => Some(p),
            _ => None,
        }
    }

    pub fn node_count(&self) -> usize {
        if let Some(n) = self.network.nodes {
            return n;
        }
        match &self.protocol {
            ProtocolConfig::Ibft(p) => p.k,
            ProtocolConfig::Nakamoto(_) => self.resources.power.len().max(1),
        }
    }

    pub fn strategy_of(&self, node: NodeId) -> StrategySpec {
        self.strategies
            .iter()
            .find(|a| a.node == node.0)
            .map(|a| a.strategy.clone())
            .unwrap_or(StrategySpec::Honest)
    }

    /// Nodes following the default strategy.
    pub fn honest_nodes(&self) -> Vec<bool> {
        (0..self.node_count())
            .map(|i| self.strategy_of(NodeId(i as u32)).is_honest())
            .collect()
    }

    pub fn observer_node(&self) -> NodeId {
        if let Some(o) = self.observer {
            return NodeId(o);
        }
        let honest = self.honest_nodes();
        NodeId(honest.iter().position(|&h| h).unwrap_or(0) as u32)
    }

    /// Power amounts after scaling, one per node.
    pub fn power(&self) -> Vec<f64> {
        (0..self.node_count())
            .map(|i| self.resources.power.get(i).copied().unwrap_or(1.0) * self.resources.scale)
            .collect()
    }

    /// Authority key per node (IBFT only).
    pub fn keys(&self) -> Vec<Option<u32>> {
        let n = self.node_count();
        match (&self.protocol, &self.resources.keys) {
            (ProtocolConfig::Ibft(_), Some(keys)) => (0..n).map(|i| keys.get(i).copied().flatten()).collect(),
            (ProtocolConfig::Ibft(p), None) => (0..n).map(|i| (i < p.k).then_some(i as u32)).collect(),
            _ => vec![None; n],
        }
    }

    /// Share of the consensus-critical resource per node: hash power for
    /// Nakamoto, authority keys for IBFT.
    pub fn consensus_fractions(&self) -> Vec<f64> {
        let amounts: Vec<f64> = match &self.protocol {
            ProtocolConfig::Nakamoto(_) => self.power(),
            ProtocolConfig::Ibft(_) => self
                .keys()
                .iter()
                .map(|k| if k.is_some() { 1.0 } else { 0.0 })
                .collect(),
        };
        let total: f64 = amounts.iter().sum();
        if total <= 0.0 {
            return vec![0.0; amounts.len()];
        }
        amounts.iter().map(|a| a / total).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCENARIO_SCHEMA {
            return invalid(format!(
                "unsupported schema {:?}, expected {SCENARIO_SCHEMA:?}",
                self.schema
            ));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return invalid("horizon must be a finite number >= 0");
        }
        let n = self.node_count();
        if n == 0 {
            return invalid("scenario needs at least one node");
        }
        let in_range = |node: u32, what: &str| -> Result<(), ConfigError> {
            if (node as usize) < n {
                Ok(())
            } else {
                invalid(format!("{what} refers to node {node} but there are {n} nodes"))
            }
        };
        if let Some(o) = self.observer {
            in_range(o, "observer")?;
        }
        if let Some(s) = self.snapshot_interval {
            if !(s > 0.0) {
                return invalid("snapshot_interval must be > 0");
            }
        }
        match &self.protocol {
            ProtocolConfig::Nakamoto(p) => p.validate().map_err(ConfigError::Invalid)?,
            ProtocolConfig::Ibft(p) => {
                p.validate().map_err(ConfigError::Invalid)?;
                if p.k > n {
                    return invalid(format!("ibft k = {} exceeds node count {n}", p.k));
                }
                let keys = self.keys();
                let mut seen = BTreeSet::new();
                for k in keys.iter().flatten() {
                    if *k as usize >= p.k {
                        return invalid(format!("key {k} out of range 0..{}", p.k));
                    }
                    if !seen.insert(*k) {
                        return invalid(format!("key {k} is held by more than one node"));
                    }
                }
                if let Some(rot) = &p.proposer_rotation {
                    let set: BTreeSet<_> = rot.iter().copied().collect();
                    if rot.len() != p.k || set.len() != p.k || rot.iter().any(|&k| k as usize >= p.k) {
                        return invalid("proposer_rotation must be a permutation of 0..k");
                    }
                }
            }
        }
        if !self.resources.power.is_empty() && self.resources.power.len() != n {
            return invalid(format!(
                "resources.power has {} entries for {n} nodes",
                self.resources.power.len()
            ));
        }
        if !self.resources.bandwidth.is_empty() && self.resources.bandwidth.len() != n {
            return invalid("resources.bandwidth must have one entry per node");
        }
        if self
            .resources
            .power
            .iter()
            .chain(&self.resources.bandwidth)
            .any(|&a| !(a >= 0.0 && a.is_finite()))
        {
            return invalid("resource amounts must be finite and >= 0");
        }
        if !(self.resources.scale > 0.0 && self.resources.scale.is_finite()) {
            return invalid("resources.scale must be > 0");
        }
        if let ProtocolConfig::Nakamoto(p) = &self.protocol {
            if p.mining == crate::protocols::nakamoto::MiningMode::Auto && self.power().iter().sum::<f64>() <= 0.0 {
                return invalid("automatic mining needs positive total power");
            }
        }
        self.network.latency.validate()?;
        for e in &self.network.edges {
            in_range(e.a, "edge")?;
            in_range(e.b, "edge")?;
            if e.a == e.b {
                return invalid(format!("self-loop edge on node {}", e.a));
            }
            if let Some(l) = &e.latency {
                l.validate()?;
            }
        }
        if let TopologyKind::Star { center } = self.network.topology {
            in_range(center, "star center")?;
        }
        for p in &self.network.partitions {
            if !(p.start >= 0.0 && p.end > p.start) {
                return invalid("partition needs 0 <= start < end");
            }
            for [a, b] in &p.edges {
                in_range(*a, "partition")?;
                in_range(*b, "partition")?;
            }
            for a in &p.isolate {
                in_range(*a, "partition")?;
            }
        }
        for a in &self.strategies {
            in_range(a.node, "strategy assignment")?;
            a.strategy.validate(&self.protocol).map_err(ConfigError::Invalid)?;
        }
        let w = &self.workload;
        if !(w.tx_rate >= 0.0 && w.tx_rate.is_finite()) {
            return invalid("workload.tx_rate must be >= 0");
        }
        match w.fee {
            FeeDistribution::Fixed { amount } if amount < 0.0 => return invalid("fees must be >= 0"),
            FeeDistribution::Uniform { lo, hi } if !(lo >= 0.0 && hi >= lo) => {
                return invalid("uniform fee needs 0 <= lo <= hi")
            }
            _ => {}
        }
        if let Some(s) = &w.submitters {
            for &x in s {
                in_range(x, "workload submitter")?;
            }
        }
        self.utility.validate().map_err(ConfigError::Invalid)?;
        for ev in &self.script {
            in_range(ev.node(), "scripted event")?;
            if !(ev.at() >= 0.0) {
                return invalid("scripted events need at >= 0");
            }
            if let ScriptedEvent::Tx { fee, .. } = ev {
                if *fee < 0.0 {
                    return invalid("fees must be >= 0");
                }
            }
        }
        crate::simnet::topology::Topology::build(self)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?
            .check_connected()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Loads `.json` files as JSON and everything else as TOML.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let value = load_value(path)?;
        serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to toml")
    }
}

/// Reads a config file into a generic JSON value (for axis patching).
pub fn load_value(path: &Path) -> Result<serde_json::Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}

/// Sets the dotted `path` (e.g. `protocol.k`) in a config value and
/// re-parses it. Unknown fields are rejected by the schema.
pub fn patch(base: &serde_json::Value, path: &str, value: serde_json::Value) -> Result<ScenarioConfig, ConfigError> {
    let mut root = base.clone();
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return invalid(format!("bad axis {path:?}"));
    }
    let mut cur = &mut root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        let obj = match cur {
            serde_json::Value::Object(m) => m,
            _ => return invalid(format!("axis {path:?}: {part:?} is not inside a table")),
        };
        if last {
            obj.insert(part.to_string(), value.clone());
            break;
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    let cfg: ScenarioConfig =
        serde_json::from_value(root).map_err(|e| ConfigError::Invalid(format!("axis {path:?}: {e}")))?;
    Ok(cfg)
}

/// Bundled scenario files.
pub mod presets {
    use super::ScenarioConfig;

    pub const FORK_WINDOW: &str = include_str!("../scenarios/fork_window.toml");
    pub const DOUBLE_SPEND: &str = include_str!("../scenarios/double_spend.toml");
    pub const SELFISH_MINING: &str = include_str!("../scenarios/selfish_mining.toml");
    pub const IBFT_HONEST: &str = include_str!("../scenarios/ibft_honest.toml");
    pub const CENTRALIZED_STAR: &str = include_str!("../scenarios/centralized_star.toml");
    pub const TWO_MINERS: &str = include_str!("../scenarios/two_miners.toml");

    /// The three-node scripted fork used as the golden trace.
    pub fn fork_window() -> ScenarioConfig {
        ScenarioConfig::from_toml_str(FORK_WINDOW).expect("bundled scenario parses")
    }

    /// Two-node scripted double spend against six-confirmation finality.
    pub fn double_spend() -> ScenarioConfig {
        ScenarioConfig::from_toml_str(DOUBLE_SPEND).expect("bundled scenario parses")
    }

    pub fn selfish_mining() -> ScenarioConfig {
        ScenarioConfig::from_toml_str(SELFISH_MINING).expect("bundled scenario parses")
    }

    pub fn ibft_honest() -> ScenarioConfig {
        ScenarioConfig::from_toml_str(IBFT_HONEST).expect("bundled scenario parses")
    }

    pub fn centralized_star() -> ScenarioConfig {
        ScenarioConfig::from_toml_str(CENTRALIZED_STAR).expect("bundled scenario parses")
    }

    pub fn two_miners() -> ScenarioConfig {
        ScenarioConfig::from_toml_str(TWO_MINERS).expect("bundled scenario parses")
    }

    pub fn all() -> Vec<(&'static str, ScenarioConfig)> {
        vec![
            ("fork_window", fork_window()),
            ("double_spend", double_spend()),
            ("selfish_mining", selfish_mining()),
            ("ibft_honest", ibft_honest()),
            ("centralized_star", centralized_star()),
            ("two_miners", two_miners()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for (name, cfg) in presets::all() {
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn toml_and_json_agree() {
        let cfg = presets::fork_window();
        let json = serde_json::to_string(&cfg).unwrap();
        let back = ScenarioConfig::from_json_str(&json).unwrap();
        assert_eq!(cfg, back);
        let toml_back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, toml_back);
        assert_eq!(cfg.digest(), back.digest());
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"
            horizon = 10.0
            bogus = 1
            [protocol]
            kind = "nakamoto"
        "#;
        assert!(ScenarioConfig::from_toml_str(bad).is_err());
    }

    #[test]
    fn patch_axis() {
        let base = serde_json::to_value(ScenarioConfig::ibft(4)).unwrap();
        let cfg = patch(&base, "protocol.k", serde_json::json!(7)).unwrap();
        assert_eq!(cfg.node_count(), 7);
        assert!(patch(&base, "protocol.nope", serde_json::json!(7)).is_err());
        assert!(patch(&base, "horizon.x", serde_json::json!(7)).is_err());
    }

    #[test]
    fn validation_errors() {
        let mut c = ScenarioConfig::nakamoto(&[1.0, 1.0]);
        c.observer = Some(5);
        assert!(c.validate().is_err());

        let c = ScenarioConfig::nakamoto(&[0.0, 0.0]);
        assert!(c.validate().is_err());

        let mut c = ScenarioConfig::ibft(4);
        c.ibft_params_mut().unwrap().quorum = Some(5);
        assert!(c.validate().is_err());

        let c = ScenarioConfig::nakamoto(&[1.0, 1.0, 1.0]).with_topology(TopologyKind::Custom);
        assert!(c.validate().is_err(), "edgeless three-node network is disconnected");
    }

    #[test]
    fn fractions_and_keys() {
        let c = ScenarioConfig::nakamoto(&[3.0, 1.0]);
        assert_eq!(c.consensus_fractions(), vec![0.75, 0.25]);
        let c = ScenarioConfig::ibft(4).with_nodes(6);
        assert_eq!(c.keys(), vec![Some(0), Some(1), Some(2), Some(3), None, None]);
        assert_eq!(c.consensus_fractions()[4], 0.0);
    }
}
