//! Griefing factors: how much loss a deviation inflicts on others per unit
//! of loss the deviator takes on.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::Estimate;
use super::MetricsError;
use crate::chain::NodeId;
use crate::scenario::ScenarioConfig;
use crate::simnet::{run, Trace};
use crate::strategies::utility::{estimate_all, UtilityModel};
use crate::strategies::StrategySpec;

/// A ratio that is unbounded when the deviator loses nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ratio {
    Finite(f64),
    Infinite,
}

impl Ratio {
    pub fn of(num: f64, den: f64) -> Self {
        if den > 0.0 {
            Ratio::Finite(num / den)
        } else {
            Ratio::Infinite
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Ratio::Finite(x) => x,
            Ratio::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Ratio::Infinite)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(x) => write!(f, "{x}"),
            Ratio::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimFactor {
    pub victim: NodeId,
    /// `v_m(D) - v_m(D_{n,s})`.
    pub loss: f64,
    pub factor: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriefingReport {
    pub attacker: NodeId,
    /// `v_n(D) - v_n(D_{n,s})`.
    pub attacker_loss: f64,
    pub victims: Vec<VictimFactor>,
    /// Total victim loss per unit of attacker loss.
    pub network: Ratio,
}

/// Strategy assignments with node `n` and explicit honest entries removed.
fn profile_without(cfg: &ScenarioConfig, n: NodeId) -> serde_json::Value {
    let mut c = cfg.clone();
    c.strategies
        .retain(|a| a.node != n.0 && a.strategy != StrategySpec::Honest);
    c.strategies.sort_by_key(|a| a.node);
    c.name = String::new();
    serde_json::to_value(&c).expect("config serializes")
}

/// Griefing factors of the deviation recorded in `deviant` against the
/// default profile recorded in `baseline`. The two traces must describe
/// the same scenario apart from node `n`'s strategy.
pub fn griefing_factor(
    baseline: &Trace,
    deviant: &Trace,
    n: NodeId,
    model: &UtilityModel,
) -> Result<GriefingReport, MetricsError> {
    if profile_without(baseline.scenario(), n) != profile_without(deviant.scenario(), n) {
        return Err(MetricsError::ProfileMismatch(n));
    }
    let a = estimate_all(baseline, model)?;
    let b = estimate_all(deviant, model)?;
    if n.index() >= a.len() {
        return Err(MetricsError::InvalidInput(format!("no node {n}")));
    }
    let losses: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(report_from_losses(n, &losses))
}

fn report_from_losses(n: NodeId, losses: &[f64]) -> GriefingReport {
    let attacker_loss = losses[n.index()];
    let victims: Vec<VictimFactor> = losses
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != n.index())
        .map(|(i, &loss)| VictimFactor {
            victim: NodeId(i as u32),
            loss,
            factor: Ratio::of(loss, attacker_loss),
        })
        .collect();
    let total: f64 = victims.iter().map(|v| v.loss).sum();
    GriefingReport {
        attacker: n,
        attacker_loss,
        network: Ratio::of(total, attacker_loss),
        victims,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriefingEstimate {
    /// Mean per-node losses over paired seeds.
    pub losses: Vec<Estimate>,
    /// Factors computed from the mean losses.
    pub report: GriefingReport,
}

/// Runs the default profile and the deviation over paired seeds and
/// reports griefing factors of the mean losses.
pub fn griefing_experiment(
    cfg: &ScenarioConfig,
    n: NodeId,
    s: &StrategySpec,
    model: &UtilityModel,
    seeds: &[u64],
) -> Result<GriefingEstimate, MetricsError> {
    if seeds.is_empty() {
        return Err(MetricsError::InvalidInput("need at least one seed".into()));
    }
    let honest = cfg.clone().with_strategy(n.0, StrategySpec::Honest);
    let deviant = cfg.clone().with_strategy(n.0, s.clone());
    let per_seed: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<f64>, MetricsError> {
            let a = estimate_all(&run(&honest, cfg.horizon, seed)?, model)?;
            let b = estimate_all(&run(&deviant, cfg.horizon, seed)?, model)?;
            Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect())
        })
        .collect::<Result<_, _>>()?;
    let count = cfg.node_count();
    let losses: Vec<Estimate> = (0..count)
        .map(|i| Estimate::of(&per_seed.iter().map(|l| l[i]).collect::<Vec<_>>()))
        .collect();
    let means: Vec<f64> = losses.iter().map(|e| e.mean).collect();
    Ok(GriefingEstimate {
        report: report_from_losses(n, &means),
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_guards_nonpositive_denominator() {
        assert_eq!(Ratio::of(2.0, 4.0), Ratio::Finite(0.5));
        assert!(Ratio::of(1.0, 0.0).is_infinite());
        assert!(Ratio::of(1.0, -1.0).is_infinite());
        assert_eq!(Ratio::Infinite.to_string(), "inf");
    }

    #[test]
    fn network_factor_sums_victims() {
        let r = report_from_losses(NodeId(0), &[2.0, 1.0, 3.0]);
        assert_eq!(r.victims[0].factor, Ratio::Finite(0.5));
        assert_eq!(r.victims[1].factor, Ratio::Finite(1.5));
        assert_eq!(r.network, Ratio::Finite(2.0));
    }

    #[test]
    fn identical_profiles_are_unbounded() {
        let cfg = ScenarioConfig::nakamoto(&[1.0, 1.0]).with_horizon(20_000.0);
        let t = run(&cfg, cfg.horizon, 3).unwrap();
        let r = griefing_factor(&t, &t, NodeId(0), &UtilityModel::default()).unwrap();
        assert!(r.network.is_infinite());
    }

    #[test]
    fn other_differences_rejected() {
        let a = ScenarioConfig::nakamoto(&[1.0, 1.0]).with_horizon(1000.0);
        let b = a.clone().with_strategy(1, StrategySpec::Withhold);
        let ta = run(&a, a.horizon, 1).unwrap();
        let tb = run(&b, b.horizon, 1).unwrap();
        assert!(matches!(
            griefing_factor(&ta, &tb, NodeId(0), &UtilityModel::default()),
            Err(MetricsError::ProfileMismatch(_))
        ));
        assert!(griefing_factor(&ta, &tb, NodeId(1), &UtilityModel::default()).is_ok());
    }
}
