//! Does merging two miners pay? With linear block rewards it does not; a
//! bonus for consecutive blocks by the same miner makes pooling profitable.

use presto_sim::metrics::perfect_decentralization_check;
use presto_sim::scenario::{LatencyModel, ScenarioConfig};
use presto_sim::strategies::utility::UtilityModel;
use presto_sim::NodeId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::nakamoto(&[0.2, 0.3, 0.5])
        .with_horizon(1_200_000.0)
        .with_latency(LatencyModel::Deterministic { delay: 0.0 });
    let seeds: Vec<u64> = (0..10).collect();

    let linear = UtilityModel::default();
    let bonus = UtilityModel {
        consecutive_block_bonus: 0.5,
        ..UtilityModel::default()
    };
    for (name, model) in [("linear rewards", linear), ("consecutive-block bonus", bonus)] {
        let r = perfect_decentralization_check(&cfg, NodeId(0), NodeId(1), &model, &seeds)?;
        println!(
            "{name}: separate {:.4e}/s, merged {:.4e}/s, gain {:.2e} ± {:.1e}, perfectly decentralized: {}",
            r.separate.mean, r.merged.mean, r.gain.mean, r.gain.std_err, r.holds
        );
    }
    Ok(())
}
