//! Reward shares of two honest miners, and how a selfish miner skews them.

use presto_sim::metrics::fairness::{trace_fairness, windowed_fairness};
use presto_sim::run;
use presto_sim::scenario::presets;
use presto_sim::strategies::StrategySpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = presets::two_miners();
    let trace = run(&cfg, cfg.horizon, 11)?;
    let report = trace_fairness(&trace)?;
    for n in &report.nodes {
        println!(
            "{}: power {:.2} reward share {:.4} epsilon {:.4}",
            n.node, n.fraction, n.share, n.epsilon
        );
    }
    println!("empirical epsilon {:.4}", report.epsilon);

    let windows = windowed_fairness(&trace, 60_000.0)?;
    let worst = windows.iter().map(|w| w.1).fold(0.0, f64::max);
    println!("worst epsilon over {} windows of 100 blocks: {worst:.3}", windows.len());

    let mut attacked = presets::two_miners().with_strategy(1, StrategySpec::Selfish { gamma: 0.0 });
    attacked.resources.power = vec![0.6, 0.4];
    let trace = run(&attacked, attacked.horizon, 11)?;
    let report = trace_fairness(&trace)?;
    println!(
        "selfish miner with alpha {:.2}: honest share {:.4}, epsilon {:.4}",
        report.alpha.unwrap_or(0.0),
        report.nodes[0].share,
        report.epsilon
    );
    Ok(())
}
