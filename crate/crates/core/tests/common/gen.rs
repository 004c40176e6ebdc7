//! Random scenarios and a trace-level invariant checker that rebuilds every
//! node's view from the recorded deltas.

use std::collections::{HashMap, HashSet};

use presto_sim::metrics::forks::heads_consistent;
use presto_sim::metrics::TraceIndex;
use presto_sim::protocols::nakamoto::MiningMode;
use presto_sim::protocols::Tiebreak;
use presto_sim::scenario::{
    FeeDistribution, LatencyModel, PartitionSpec, ProtocolConfig, ScenarioConfig, ScriptedEvent, TopologyKind,
    WorkloadConfig,
};
use presto_sim::simnet::trace::RecordKind;
use presto_sim::strategies::StrategySpec;
use presto_sim::{BlockId, NodeId, Trace};
use rand::Rng;

/// A small random scenario that always validates. IBFT scenarios keep the
/// number of faulty keys within `floor((k - 1) / 3)`.
pub fn random_scenario<R: Rng>(rng: &mut R) -> ScenarioConfig {
    if rng.random_bool(0.3) {
        random_ibft(rng)
    } else {
        random_nakamoto(rng)
    }
}

fn random_latency<R: Rng>(rng: &mut R, scale: f64) -> LatencyModel {
    if rng.random_bool(0.5) {
        LatencyModel::Deterministic {
            delay: rng.random_range(0.0..scale),
        }
    } else {
        LatencyModel::Exponential {
            mean: rng.random_range(0.01 * scale..scale),
        }
    }
}

fn random_nakamoto<R: Rng>(rng: &mut R) -> ScenarioConfig {
    let n = rng.random_range(1..=5usize);
    let power: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let mut cfg = ScenarioConfig::nakamoto(&power).with_horizon(rng.random_range(50.0..400.0));
    {
        let p = cfg.nakamoto_params_mut().expect("nakamoto");
        p.mean_block_interval = rng.random_range(2.0..20.0);
        p.confirmations = rng.random_range(0..4);
        p.max_txs_per_block = rng.random_range(1..8);
        if rng.random_bool(0.5) {
            p.tiebreak = Tiebreak::Uniform;
        }
        if rng.random_bool(0.2) {
            p.mining = MiningMode::Scripted;
        }
    }
    let scripted = matches!(&cfg.protocol, ProtocolConfig::Nakamoto(p) if p.mining == MiningMode::Scripted);
    if scripted {
        for _ in 0..rng.random_range(1..12) {
            cfg.script.push(ScriptedEvent::Mine {
                at: rng.random_range(0.0..cfg.horizon),
                node: rng.random_range(0..n as u32),
            });
        }
    }
    cfg.network.topology = match rng.random_range(0..4) {
        0 => TopologyKind::FullMesh,
        1 => TopologyKind::Line,
        2 => TopologyKind::Ring,
        _ => TopologyKind::Star {
            center: rng.random_range(0..n as u32),
        },
    };
    cfg.network.latency = random_latency(rng, 5.0);
    if n > 1 && rng.random_bool(0.3) {
        let start = rng.random_range(0.0..cfg.horizon);
        cfg.network.partitions.push(PartitionSpec {
            start,
            end: start + rng.random_range(1.0..cfg.horizon),
            edges: Vec::new(),
            isolate: vec![rng.random_range(0..n as u32)],
        });
    }
    for node in 0..n as u32 {
        let s = match rng.random_range(0..10) {
            0 => StrategySpec::Selfish {
                gamma: rng.random_range(0.0..=1.0),
            },
            1 => StrategySpec::Withhold,
            2 => StrategySpec::Censor { creators: vec![0] },
            3 => StrategySpec::Crashed,
            4 => StrategySpec::PrivateChain,
            _ => StrategySpec::Honest,
        };
        if s == StrategySpec::PrivateChain {
            cfg.script.push(ScriptedEvent::Wake {
                at: rng.random_range(0.0..cfg.horizon),
                node,
            });
        }
        cfg = cfg.with_strategy(node, s);
    }
    random_workload(rng, &mut cfg);
    cfg
}

fn random_ibft<R: Rng>(rng: &mut R) -> ScenarioConfig {
    let k = rng.random_range(1..=6usize);
    let extra = rng.random_range(0..=2usize);
    let mut cfg = ScenarioConfig::ibft(k)
        .with_horizon(rng.random_range(10.0..60.0))
        .with_nodes(k + extra);
    {
        let p = cfg.ibft_params_mut().expect("ibft");
        p.round_timeout = rng.random_range(2.0..8.0);
        p.block_period = rng.random_range(0.1..1.5);
        p.max_txs_per_block = rng.random_range(1..8);
    }
    cfg.network.latency = random_latency(rng, 0.5);
    let f = (k - 1) / 3;
    let faulty = rng.random_range(0..=f);
    for key in 0..faulty as u32 {
        let s = if rng.random_bool(0.5) {
            StrategySpec::Crashed
        } else {
            StrategySpec::Withhold
        };
        cfg = cfg.with_strategy(k as u32 - 1 - key, s);
    }
    random_workload(rng, &mut cfg);
    cfg
}

fn random_workload<R: Rng>(rng: &mut R, cfg: &mut ScenarioConfig) {
    if rng.random_bool(0.6) {
        cfg.workload = WorkloadConfig {
            tx_rate: rng.random_range(0.0..0.5),
            fee: FeeDistribution::Uniform { lo: 0.0, hi: 0.1 },
            backlog: rng.random_range(0..4),
            submitters: None,
        };
    }
}

/// Checks the view and head invariants of a trace produced in memory.
///
/// * records are ordered by time, and events at one instant by sequence
///   number (snapshots are taken before the events they precede)
/// * a block enters a view once, after its parent
/// * every head lies in its node's view
/// * an honest Nakamoto node's head carries the most work in its view
/// * honest IBFT heads lie on one chain
/// * the rebuilt views and heads match the final state
pub fn check_trace_invariants(trace: &Trace) -> Result<(), String> {
    let idx = TraceIndex::build(trace).map_err(|e| e.to_string())?;
    let dag = &idx.dag;
    let cfg = trace.scenario();
    let n = cfg.node_count();
    let nakamoto = matches!(cfg.protocol, ProtocolConfig::Nakamoto(_));
    let honest = cfg.honest_nodes();
    let work = |b: BlockId| dag.cumulative_work(b).map_err(|e| e.to_string());

    let mut views: Vec<HashSet<BlockId>> = vec![HashSet::from([BlockId::GENESIS]); n];
    let mut heads = vec![BlockId::GENESIS; n];
    let mut best: Vec<f64> = vec![work(BlockId::GENESIS)?; n];
    let mut last: Option<(f64, u64)> = None;

    for r in &trace.records {
        if let Some((t, seq)) = last {
            if r.t < t || (r.t == t && r.seq <= seq && r.kind != RecordKind::Snapshot) {
                return Err(format!("record order broken at seq {}", r.seq));
            }
        }
        if r.kind != RecordKind::Snapshot {
            last = Some((r.t, r.seq));
        }
        let Some(node) = r.node else { continue };
        let i = node.index();
        for &b in &r.extra.added {
            let parent = dag
                .parent(b)
                .map_err(|e| e.to_string())?
                .ok_or_else(|| format!("genesis re-added at seq {}", r.seq))?;
            if !views[i].contains(&parent) {
                return Err(format!("{b} entered {node}'s view before its parent"));
            }
            if !views[i].insert(b) {
                return Err(format!("{b} entered {node}'s view twice"));
            }
            best[i] = best[i].max(work(b)?);
        }
        if let Some(h) = r.extra.head {
            heads[i] = h;
        }
        if !views[i].contains(&heads[i]) {
            return Err(format!("{node}'s head {} is outside its view at t={}", heads[i], r.t));
        }
        if nakamoto && honest[i] && work(heads[i])? < best[i] {
            return Err(format!("honest {node} is not on a most-work tip at t={}", r.t));
        }
    }

    if !nakamoto {
        let honest_heads: Vec<BlockId> = (0..n).filter(|&i| honest[i]).map(|i| heads[i]).collect();
        if !heads_consistent(dag, &honest_heads).map_err(|e| e.to_string())? {
            return Err("honest IBFT heads diverged".into());
        }
    }

    let state = trace.final_state.as_ref().ok_or("trace has no final state")?;
    for (i, s) in state.nodes.iter().enumerate() {
        let mut rebuilt: Vec<BlockId> = views[i].iter().copied().collect();
        rebuilt.sort();
        if rebuilt != s.view {
            return Err(format!(
                "rebuilt view of {} differs from the final state",
                NodeId(i as u32)
            ));
        }
        if heads[i] != s.head {
            return Err(format!(
                "rebuilt head of {} differs from the final state",
                NodeId(i as u32)
            ));
        }
    }
    Ok(())
}

/// Per-node parent links of every block in a trace, for the ancestry oracle.
pub fn parent_links(trace: &Trace) -> HashMap<u64, u64> {
    let idx = TraceIndex::build(trace).expect("trace indexes");
    idx.dag.iter().filter_map(|b| b.parent.map(|p| (b.id.0, p.0))).collect()
}
