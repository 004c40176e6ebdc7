//! Consensus messages per decision in IBFT as the validator set grows, and
//! the price of decentralization against a single producer.

use presto_sim::metrics::efficiency::{message_complexity, pod, Polarity};
use presto_sim::run;
use presto_sim::scenario::{presets, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("   k  messages/decision  2k^2-k-1  centralized  PoD");
    for k in [4usize, 7, 10, 13] {
        let cfg = ScenarioConfig::ibft(k).with_horizon(120.0);
        let mc = message_complexity(&run(&cfg, cfg.horizon, 0)?)?;

        let mut star = presets::centralized_star().with_nodes(k);
        star.resources.power = (0..k).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let base = message_complexity(&run(&star, star.horizon, 0)?)?;

        let ratio = pod(mc.per_decision, base.per_decision, Polarity::LowerIsBetter)?.ratio;
        let formula = 2 * k * k - k - 1;
        println!(
            "{k:4}  {:17.2}  {formula:8}  {:11.2}  {ratio:.2}",
            mc.per_decision, base.per_decision
        );
    }
    Ok(())
}
