//! Throughput under a saturated mempool as block capacity grows, and as
//! total hash power grows at fixed difficulty.

use presto_sim::metrics::efficiency::{scalability_sweep, Measure};
use presto_sim::scenario::{ScenarioConfig, WorkloadConfig};
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::nakamoto(&[1.0, 1.0, 1.0])
        .with_horizon(600_000.0)
        .with_workload(WorkloadConfig {
            tx_rate: 0.05,
            backlog: 20_000,
            ..WorkloadConfig::default()
        });
    let seeds = [1, 2, 3];

    let values = [json!(10), json!(20), json!(40)];
    let r = scalability_sweep(&cfg, "protocol.max_txs_per_block", &values, &seeds, Measure::Throughput)?;
    for p in &r.points {
        println!(
            "capacity {:3}: {:.4} tx/s ± {:.4}",
            p.value, p.estimate.mean, p.estimate.std_err
        );
    }
    println!("scalable in block capacity: {}", r.scalable);

    let mut cfg = cfg;
    if let Some(p) = cfg.nakamoto_params_mut() {
        p.max_txs_per_block = 20;
    }
    let values = [json!(1.0), json!(2.0), json!(4.0)];
    let r = scalability_sweep(&cfg, "resources.scale", &values, &seeds, Measure::Throughput)?;
    for p in &r.points {
        println!("hash power x{}: {:.4} tx/s", p.value, p.estimate.mean);
    }
    println!("scalable in hash power: {}", r.scalable);
    Ok(())
}
