//! Concentration, merging incentives and voting power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::Estimate;
use super::MetricsError;
use crate::chain::NodeId;
use crate::scenario::{ProtocolConfig, ScenarioConfig};
use crate::simnet::{resource_fraction, run, SystemState};
use crate::strategies::utility::{estimate_all, UtilityModel};

/// Herfindahl-Hirschman index of percentage market shares: `sum(s_i^2)`.
/// Shares need not sum to 100 when only the largest holders are listed.
pub fn hhi_from_shares(shares: &[f64]) -> Result<f64, MetricsError> {
    if shares.is_empty() {
        return Err(MetricsError::InvalidInput("no shares".into()));
    }
    if shares.iter().any(|s| !(0.0..=100.0).contains(s)) {
        return Err(MetricsError::InvalidInput("shares must lie in [0, 100]".into()));
    }
    if shares.iter().sum::<f64>() > 100.0 + 1e-6 {
        return Err(MetricsError::InvalidInput("shares sum to more than 100".into()));
    }
    Ok(shares.iter().map(|s| s * s).sum())
}

/// HHI of resource `kind` across all nodes of `state`, in `(0, 10000]`.
pub fn hhi(state: &SystemState, kind: &str) -> Result<f64, MetricsError> {
    let shares: Vec<f64> = (0..state.nodes.len())
        .map(|i| resource_fraction(state, NodeId(i as u32), kind).map(|f| 100.0 * f))
        .collect::<Result<_, _>>()?;
    hhi_from_shares(&shares)
}

/// Raw Banzhaf counts: for each voter, the number of coalitions without it
/// that fail the threshold but pass once it joins.
pub fn pivotality(weights: &[f64], threshold: f64) -> Result<Vec<u64>, MetricsError> {
    let n = weights.len();
    if n > 20 {
        return Err(MetricsError::TooManyNodes(n));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(MetricsError::InvalidInput("weights must be >= 0".into()));
    }
    // coalition weights by bitmask, built from the lowest set bit
    let mut sum = vec![0.0f64; 1 << n];
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        sum[mask] = sum[mask & (mask - 1)] + weights[low];
    }
    let eps = 1e-12;
    let wins = |m: usize| sum[m] >= threshold - eps;
    let mut counts = vec![0u64; n];
    for mask in 0usize..1 << n {
        if wins(mask) {
            continue;
        }
        for (i, c) in counts.iter_mut().enumerate() {
            if mask & (1 << i) == 0 && wins(mask | 1 << i) {
                *c += 1;
            }
        }
    }
    Ok(counts)
}

/// Banzhaf counts normalized to sum to one (all zero if nobody is pivotal).
pub fn banzhaf_index(weights: &[f64], threshold: f64) -> Result<Vec<f64>, MetricsError> {
    let c = pivotality(weights, threshold)?;
    let total: u64 = c.iter().sum();
    Ok(c.iter()
        .map(|&x| if total == 0 { 0.0 } else { x as f64 / total as f64 })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecentralizationReport {
    pub n: NodeId,
    pub m: NodeId,
    /// `v_n + v_m` with both nodes separate.
    pub separate: Estimate,
    /// `v_n + v_m` after `m`'s resources move to `n`.
    pub merged: Estimate,
    /// Paired per-seed `merged - separate`.
    pub gain: Estimate,
    /// Merging is not significantly profitable.
    pub holds: bool,
}

/// Moves node `m`'s power to node `n`. `m` stays in the network as a relay.
pub fn merge_resources(cfg: &ScenarioConfig, n: NodeId, m: NodeId) -> Result<ScenarioConfig, MetricsError> {
    if !matches!(cfg.protocol, ProtocolConfig::Nakamoto(_)) {
        return Err(MetricsError::InvalidInput(
            "resource merging is defined for hash power only".into(),
        ));
    }
    let count = cfg.node_count();
    if n == m || n.index() >= count || m.index() >= count {
        return Err(MetricsError::InvalidInput(format!("cannot merge {m} into {n}")));
    }
    let mut out = cfg.clone();
    let mut power: Vec<f64> = (0..count)
        .map(|i| cfg.resources.power.get(i).copied().unwrap_or(1.0))
        .collect();
    power[n.index()] += power[m.index()];
    power[m.index()] = 0.0;
    out.resources.power = power;
    Ok(out)
}

/// Checks whether two nodes gain by pooling resources, comparing the sum
/// of their utilities in the original and merged systems over paired seeds.
pub fn perfect_decentralization_check(
    cfg: &ScenarioConfig,
    n: NodeId,
    m: NodeId,
    model: &UtilityModel,
    seeds: &[u64],
) -> Result<DecentralizationReport, MetricsError> {
    if seeds.is_empty() {
        return Err(MetricsError::InvalidInput("need at least one seed".into()));
    }
    let merged_cfg = merge_resources(cfg, n, m)?;
    let pairs: Vec<(f64, f64)> = seeds
        .par_iter()
        .map(|&seed| -> Result<(f64, f64), MetricsError> {
            let a = run(cfg, cfg.horizon, seed)?;
            let b = run(&merged_cfg, cfg.horizon, seed)?;
            let va = estimate_all(&a, model)?;
            let vb = estimate_all(&b, model)?;
            Ok((va[n.index()] + va[m.index()], vb[n.index()] + vb[m.index()]))
        })
        .collect::<Result<_, _>>()?;
    let sep: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mer: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diff: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    let gain = Estimate::of(&diff);
    Ok(DecentralizationReport {
        n,
        m,
        separate: Estimate::of(&sep),
        merged: Estimate::of(&mer),
        gain,
        holds: !gain.significantly_positive(0.05),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hhi_extremes() {
        assert_eq!(hhi_from_shares(&[100.0]).unwrap(), 10_000.0);
        assert!((hhi_from_shares(&[25.0; 4]).unwrap() - 2500.0).abs() < 1e-9);
        assert!(hhi_from_shares(&[60.0, 50.0]).is_err());
        assert!(hhi_from_shares(&[]).is_err());
    }

    #[test]
    fn pivotality_limits() {
        assert!(matches!(
            pivotality(&[1.0; 21], 0.5),
            Err(MetricsError::TooManyNodes(21))
        ));
        // a dictator is pivotal in every coalition of the others
        assert_eq!(pivotality(&[0.6, 0.2, 0.2], 0.51).unwrap(), vec![4, 0, 0]);
        // symmetric majority of three: each pivotal in two coalitions
        assert_eq!(pivotality(&[1.0, 1.0, 1.0], 2.0).unwrap(), vec![2, 2, 2]);
    }

    #[test]
    fn merge_moves_power() {
        let cfg = ScenarioConfig::nakamoto(&[1.0, 2.0, 3.0]);
        let m = merge_resources(&cfg, NodeId(0), NodeId(2)).unwrap();
        assert_eq!(m.resources.power, vec![4.0, 2.0, 0.0]);
        assert!(merge_resources(&ScenarioConfig::ibft(4), NodeId(0), NodeId(1)).is_err());
    }
}
