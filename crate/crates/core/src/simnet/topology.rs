//! Undirected network graph with per-edge latency and scheduled partitions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::SimError;
use crate::chain::NodeId;
use crate::scenario::{LatencyModel, ScenarioConfig, TopologyKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub latency: LatencyModel,
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub start: f64,
    pub end: f64,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Topology {
    n: usize,
    edges: Vec<Edge>,
    /// Per node: `(neighbor, edge index)` sorted by neighbor.
    adj: Vec<Vec<(NodeId, usize)>>,
    index: BTreeMap<(u32, u32), usize>,
    partitions: Vec<Partition>,
    /// Number of active partitions severing each edge.
    severed: Vec<u32>,
}

fn key(a: NodeId, b: NodeId) -> (u32, u32) {
    (a.0.min(b.0), a.0.max(b.0))
}

impl Topology {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self, SimError> {
        let n = cfg.node_count();
        let net = &cfg.network;
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        let n32 = n as u32;
        match net.topology {
            TopologyKind::FullMesh => {
                for a in 0..n32 {
                    for b in a + 1..n32 {
                        pairs.push((a, b));
                    }
                }
            }
            TopologyKind::Line => pairs.extend((1..n32).map(|b| (b - 1, b))),
            TopologyKind::Ring => {
                pairs.extend((1..n32).map(|b| (b - 1, b)));
                if n32 > 2 {
                    pairs.push((0, n32 - 1));
                }
            }
            TopologyKind::Star { center } => pairs.extend((0..n32).filter(|&b| b != center).map(|b| (center, b))),
            TopologyKind::Custom => {}
        }
        let mut latency: BTreeMap<(u32, u32), LatencyModel> = pairs
            .into_iter()
            .map(|(a, b)| ((a.min(b), a.max(b)), net.latency))
            .collect();
        for e in &net.edges {
            if e.a == e.b || e.a as usize >= n || e.b as usize >= n {
                return Err(SimError::Config(format!("bad edge {}-{}", e.a, e.b)));
            }
            latency.insert(key(NodeId(e.a), NodeId(e.b)), e.latency.unwrap_or(net.latency));
        }
        let mut topo = Topology {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
            index: BTreeMap::new(),
            partitions: Vec::new(),
            severed: Vec::new(),
        };
        for ((a, b), lat) in latency {
            let i = topo.edges.len();
            topo.edges.push(Edge {
                a: NodeId(a),
                b: NodeId(b),
                latency: lat,
            });
            topo.adj[a as usize].push((NodeId(b), i));
            topo.adj[b as usize].push((NodeId(a), i));
            topo.index.insert((a, b), i);
        }
        for list in &mut topo.adj {
            list.sort();
        }
        topo.severed = vec![0; topo.edges.len()];
        for p in &net.partitions {
            let mut set = BTreeSet::new();
            for [a, b] in &p.edges {
                let e = topo
                    .edge_between(NodeId(*a), NodeId(*b))
                    .ok_or_else(|| SimError::Config(format!("partition names missing edge {a}-{b}")))?;
                set.insert(e);
            }
            let iso: BTreeSet<u32> = p.isolate.iter().copied().collect();
            for (i, e) in topo.edges.iter().enumerate() {
                if iso.contains(&e.a.0) != iso.contains(&e.b.0) {
                    set.insert(i);
                }
            }
            topo.partitions.push(Partition {
                start: p.start,
                end: p.end,
                edges: set.into_iter().collect(),
            });
        }
        Ok(topo)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, usize)] {
        &self.adj[n.index()]
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<usize> {
        self.index.get(&key(a, b)).copied()
    }

    pub fn is_severed(&self, edge: usize) -> bool {
        self.severed[edge] > 0
    }

    /// Applies a partition start (`active`) or end. Returns the edges whose
    /// severed state flipped.
    pub fn set_partition(&mut self, index: usize, active: bool) -> Vec<usize> {
        let mut flipped = Vec::new();
        for &e in &self.partitions[index].edges {
            let before = self.severed[e] > 0;
            if active {
                self.severed[e] += 1;
            } else {
                self.severed[e] = self.severed[e].saturating_sub(1);
            }
            if before != (self.severed[e] > 0) {
                flipped.push(e);
            }
        }
        flipped
    }

    pub fn sample_latency<R: Rng + ?Sized>(&self, edge: usize, rng: &mut R) -> f64 {
        match self.edges[edge].latency {
            LatencyModel::Deterministic { delay } => delay,
            LatencyModel::Exponential { mean } => Exp::new(1.0 / mean).expect("positive mean").sample(rng),
        }
    }

    /// Errors unless every node can reach every other (partitions ignored).
    pub fn check_connected(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Ok(());
        }
        let mut seen = vec![false; self.n];
        let mut q = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = q.pop_front() {
            for &(v, _) in &self.adj[u] {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    q.push_back(v.index());
                }
            }
        }
        match seen.iter().position(|s| !s) {
            None => Ok(()),
            Some(i) => Err(SimError::Config(format!(
                "network is disconnected: node {i} is unreachable from node 0"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{EdgeSpec, PartitionSpec};

    #[test]
    fn shapes() {
        let cfg = |t| ScenarioConfig::nakamoto(&[1.0; 5]).with_topology(t);
        assert_eq!(Topology::build(&cfg(TopologyKind::FullMesh)).unwrap().edges().len(), 10);
        assert_eq!(Topology::build(&cfg(TopologyKind::Line)).unwrap().edges().len(), 4);
        assert_eq!(Topology::build(&cfg(TopologyKind::Ring)).unwrap().edges().len(), 5);
        let star = Topology::build(&cfg(TopologyKind::Star { center: 2 })).unwrap();
        assert_eq!(star.neighbors(NodeId(2)).len(), 4);
        assert_eq!(
            star.neighbors(NodeId(0)),
            &[(NodeId(2), star.edge_between(NodeId(0), NodeId(2)).unwrap())]
        );
    }

    #[test]
    fn overlapping_partitions_count() {
        let mut cfg = ScenarioConfig::nakamoto(&[1.0; 3]).with_topology(TopologyKind::Custom);
        cfg.network.edges = vec![
            EdgeSpec {
                a: 0,
                b: 1,
                latency: None,
            },
            EdgeSpec {
                a: 1,
                b: 2,
                latency: Some(LatencyModel::Deterministic { delay: 8.0 }),
            },
        ];
        cfg.network.partitions = vec![
            PartitionSpec {
                start: 1.0,
                end: 5.0,
                edges: vec![[1, 0]],
                isolate: vec![],
            },
            PartitionSpec {
                start: 2.0,
                end: 3.0,
                edges: vec![],
                isolate: vec![0],
            },
        ];
        let mut t = Topology::build(&cfg).unwrap();
        let e01 = t.edge_between(NodeId(1), NodeId(0)).unwrap();
        assert_eq!(t.partitions()[1].edges, vec![e01]);
        assert_eq!(t.set_partition(0, true), vec![e01]);
        assert!(t.set_partition(1, true).is_empty());
        assert!(t.set_partition(1, false).is_empty());
        assert!(t.is_severed(e01));
        assert_eq!(t.set_partition(0, false), vec![e01]);
        let mut rng = rand::rng();
        assert_eq!(
            t.sample_latency(t.edge_between(NodeId(2), NodeId(1)).unwrap(), &mut rng),
            8.0
        );
    }

    #[test]
    fn disconnected_detected() {
        let cfg = ScenarioConfig::nakamoto(&[1.0; 2]).with_topology(TopologyKind::Custom);
        assert!(Topology::build(&cfg).unwrap().check_connected().is_err());
    }
}
