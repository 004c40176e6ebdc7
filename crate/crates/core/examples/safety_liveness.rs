//! Safety and liveness audits: IBFT with crashed validators, and a scripted
//! double spend against six-confirmation finality.

use presto_sim::metrics::{audit_liveness, audit_safety};
use presto_sim::run;
use presto_sim::scenario::{presets, WorkloadConfig};
use presto_sim::strategies::StrategySpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for crashed in 0..=2u32 {
        let mut cfg = presets::ibft_honest();
        for n in 0..crashed {
            cfg = cfg.with_strategy(3 - n, StrategySpec::Crashed);
        }
        let trace = run(&cfg, cfg.horizon, 7)?;
        let safety = audit_safety(&trace, cfg.protocol.finality_rule())?;
        let live = audit_liveness(&trace, 30.0)?;
        println!(
            "ibft k=4, {crashed} crashed: {} safety violations, {} late txs of {}, {} stalls",
            safety.violations.len(),
            live.faults.len(),
            live.checked,
            live.stalls.len()
        );
    }

    let cfg = presets::double_spend();
    let trace = run(&cfg, cfg.horizon, 0)?;
    let safety = audit_safety(&trace, cfg.protocol.finality_rule())?;
    for v in &safety.violations {
        println!(
            "double spend: {} final for {} at {} reverted at {}",
            v.block, v.node, v.finalized_at, v.violated_at
        );
    }

    let busy = presets::two_miners()
        .with_horizon(200_000.0)
        .with_workload(WorkloadConfig {
            tx_rate: 0.01,
            ..WorkloadConfig::default()
        });
    let trace = run(&busy, busy.horizon, 3)?;
    let live = audit_liveness(&trace, 20_000.0)?;
    println!(
        "honest nakamoto: {} of {} txs late, {} stalls",
        live.faults.len(),
        live.checked,
        live.stalls.len()
    );
    Ok(())
}
