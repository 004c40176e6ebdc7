//! Monte-Carlo incentive-compatibility check for a single deviation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::utility::{estimate_all, UtilityModel};
use super::StrategySpec;
use crate::chain::NodeId;
use crate::metrics::stats::Estimate;
use crate::metrics::MetricsError;
use crate::scenario::ScenarioConfig;
use crate::simnet::run;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncentiveReport {
    pub node: NodeId,
    pub strategy: StrategySpec,
    /// Node's utility with everyone honest.
    pub baseline: Estimate,
    /// Node's utility after it deviates.
    pub deviant: Estimate,
    /// Paired per-seed `deviant - baseline`.
    pub delta: Estimate,
    /// The deviation is not significantly profitable (one-sided 95%).
    pub compatible: bool,
}

/// Utilities of every node in the honest profile and in the profile where
/// node `n` plays `s`, for each seed. Both runs of a seed share the seed,
/// so mining and workload draws are paired.
#[allow(clippy::type_complexity)]
pub fn paired_utilities(
    scenario: &ScenarioConfig,
    n: NodeId,
    s: &StrategySpec,
    model: &UtilityModel,
    seeds: &[u64],
) -> Result<Vec<(Vec<f64>, Vec<f64>)>, MetricsError> {
    if seeds.is_empty() {
        return Err(MetricsError::InvalidInput("need at least one seed".into()));
    }
    if n.index() >= scenario.node_count() {
        return Err(MetricsError::InvalidInput(format!("no node {n}")));
    }
    let honest = scenario.clone().with_strategy(n.0, StrategySpec::Honest);
    let deviant = scenario.clone().with_strategy(n.0, s.clone());
    deviant
        .validate()
        .map_err(|e| MetricsError::InvalidInput(e.to_string()))?;
    seeds
        .par_iter()
        .map(|&seed| {
            let a = run(&honest, scenario.horizon, seed)?;
            let va = estimate_all(&a, model)?;
            drop(a);
            let b = run(&deviant, scenario.horizon, seed)?;
            let vb = estimate_all(&b, model)?;
            Ok((va, vb))
        })
        .collect()
}

pub fn incentive_check(
    scenario: &ScenarioConfig,
    n: NodeId,
    s: &StrategySpec,
    model: &UtilityModel,
    seeds: &[u64],
) -> Result<IncentiveReport, MetricsError> {
    let pairs = paired_utilities(scenario, n, s, model, seeds)?;
    let i = n.index();
    let base: Vec<f64> = pairs.iter().map(|(a, _)| a[i]).collect();
    let dev: Vec<f64> = pairs.iter().map(|(_, b)| b[i]).collect();
    let diff: Vec<f64> = pairs.iter().map(|(a, b)| b[i] - a[i]).collect();
    let delta = Estimate::of(&diff);
    Ok(IncentiveReport {
        node: n,
        strategy: s.clone(),
        baseline: Estimate::of(&base),
        deviant: Estimate::of(&dev),
        delta,
        compatible: !delta.significantly_positive(0.05),
    })
}
