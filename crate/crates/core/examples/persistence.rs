//! Weak and strong persistence of "all honest heads lie on one chain".

use presto_sim::metrics::{persistence_check, PersistenceMode, TraceProperty};
use presto_sim::run;
use presto_sim::scenario::presets;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prop = TraceProperty::consistent_heads();

    // The golden fork heals at t=710, after the last candidate time 700.
    let cfg = presets::fork_window();
    let trace = run(&cfg, cfg.horizon, 0)?;
    for mode in [PersistenceMode::Weak, PersistenceMode::Strong] {
        let v = persistence_check(&trace, &prop, 0.0, 100.0, mode)?;
        println!("fork window, {mode:?}: {v}");
    }

    // With a longer margin the same trace has a candidate time after the
    // fork, so strong persistence holds.
    let trace = run(&cfg, 2000.0, 0)?;
    let v = persistence_check(&trace, &prop, 0.0, 500.0, PersistenceMode::Strong)?;
    println!("fork window to t=2000, Strong: {v}");

    // Honest miners with noticeable latency fork now and then but always
    // converge again.
    let mut cfg = presets::two_miners().with_horizon(600_000.0);
    cfg.network.latency = presto_sim::scenario::LatencyModel::Deterministic { delay: 30.0 };
    let trace = run(&cfg, cfg.horizon, 4)?;
    for mode in [PersistenceMode::Weak, PersistenceMode::Strong] {
        let v = persistence_check(&trace, &prop, 0.0, 60_000.0, mode)?;
        println!("two miners with 30s links, {mode:?}: {v}");
    }
    Ok(())
}
