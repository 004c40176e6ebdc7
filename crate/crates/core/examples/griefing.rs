//! Griefing factors of block withholding.
//!
//! A Nakamoto miner that withholds its blocks loses its whole reward while
//! the honest miners keep their block rate, so per wall-clock second nobody
//! else is harmed. The tiny factors left over come from the unconfirmed tip
//! at the horizon, which is the only part of the chain that differs. Measured per unit of chain growth the honest miners even
//! gain, and the factor turns negative. An IBFT validator that stops
//! voting only forfeits its vote rewards.

use presto_sim::metrics::griefing::griefing_experiment;
use presto_sim::scenario::{LatencyModel, ScenarioConfig};
use presto_sim::strategies::utility::{TimeBasis, UtilityModel};
use presto_sim::strategies::StrategySpec;
use presto_sim::NodeId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: Vec<u64> = (0..4).collect();
    let cfg = ScenarioConfig::nakamoto(&[0.3, 0.4, 0.3])
        .with_horizon(2_000_000.0)
        .with_latency(LatencyModel::Deterministic { delay: 0.0 });
    for basis in [TimeBasis::WallClock, TimeBasis::ChainGrowth] {
        let model = UtilityModel {
            time_basis: basis,
            ..UtilityModel::default()
        };
        let g = griefing_experiment(&cfg, NodeId(0), &StrategySpec::Withhold, &model, &seeds)?;
        println!(
            "nakamoto withholder, {basis:?}: attacker loss {:.3e}/s",
            g.report.attacker_loss
        );
        for v in &g.report.victims {
            println!("  {}: loss {:.3e}, factor {:.4}", v.victim, v.loss, v.factor.value());
        }
        println!("  network factor {:.4}", g.report.network.value());
    }

    let ibft = ScenarioConfig::ibft(4).with_horizon(300.0);
    let model = UtilityModel {
        vote_reward: 0.1,
        ..UtilityModel::default()
    };
    let g = griefing_experiment(&ibft, NodeId(3), &StrategySpec::Withhold, &model, &seeds)?;
    println!(
        "ibft silent validator: attacker loss {:.3e}/s, network factor {}",
        g.report.attacker_loss, g.report.network
    );
    Ok(())
}
