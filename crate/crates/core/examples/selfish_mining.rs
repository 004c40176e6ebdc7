//! Selfish mining: simulated relative revenue against the closed form, and
//! the incentive check at small and large attacker shares.

use presto_sim::metrics::TraceIndex;
use presto_sim::scenario::presets;
use presto_sim::strategies::incentive::incentive_check;
use presto_sim::strategies::StrategySpec;
use presto_sim::{run, NodeId};

/// Relative revenue of a selfish miner with share `a` and tie advantage `g`.
fn closed_form(a: f64, g: f64) -> f64 {
    let num = a * (1.0 - a).powi(2) * (4.0 * a + g * (1.0 - 2.0 * a)) - a.powi(3);
    num / (1.0 - a * (1.0 + (2.0 - a) * a))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = presets::selfish_mining();
    let horizon: f64 = std::env::args().nth(1).map_or(Ok(base.horizon), |s| s.parse())?;
    println!("share  simulated  closed-form");
    for p in [0.1, 0.2, 0.3, 0.4, 0.45] {
        let mut cfg = base.clone().with_horizon(horizon);
        cfg.resources.power = vec![p, 1.0 - p];
        let trace = run(&cfg, horizon, 1)?;
        let idx = TraceIndex::build(&trace)?;
        let chain = idx.reference_chain()?;
        let mine = chain
            .iter()
            .filter(|b| idx.dag.get(**b).map(|x| x.creator == Some(NodeId(0))).unwrap_or(false))
            .count();
        let r = mine as f64 / chain.len() as f64;
        println!("{p:5.2}  {r:9.4}  {:11.4}", closed_form(p, 0.0));
    }

    let seeds: Vec<u64> = (0..8).collect();
    for p in [0.1, 0.4] {
        let mut cfg = base.clone().with_horizon(horizon / 10.0);
        cfg.resources.power = vec![p, 1.0 - p];
        let honest = cfg.clone().with_strategy(0, StrategySpec::Honest);
        let selfish = StrategySpec::Selfish { gamma: 0.0 };
        let r = incentive_check(&honest, NodeId(0), &selfish, &cfg.utility, &seeds)?;
        println!(
            "p={p}: delta {:.3e} ± {:.1e}, incentive compatible: {}",
            r.delta.mean, r.delta.std_err, r.compatible
        );
    }
    Ok(())
}
