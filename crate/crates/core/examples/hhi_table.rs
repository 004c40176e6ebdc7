//! Herfindahl-Hirschman index of the ten largest mining pools of Bitcoin
//! and Ethereum (shares of blocks, June 2019), and of a simulated state.

use presto_sim::metrics::{hhi, hhi_from_shares};
use presto_sim::scenario::ScenarioConfig;
use presto_sim::simnet::Simulation;

const BITCOIN: [f64; 10] = [20.1, 14.5, 13.1, 8.8, 8.8, 8.3, 6.1, 4.9, 1.7, 1.4];
const ETHEREUM: [f64; 10] = [26.5, 24.5, 11.8, 11.2, 5.4, 2.3, 1.7, 1.7, 1.3, 1.2];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, shares) in [("Bitcoin", BITCOIN), ("Ethereum", ETHEREUM)] {
        let total: f64 = shares.iter().sum();
        println!(
            "{name:8}  top-10 share {total:.1}%  HHI {:.1}",
            hhi_from_shares(&shares)?
        );
    }

    // The same index on a simulated network state, from raw hash power.
    let cfg = ScenarioConfig::nakamoto(&BITCOIN);
    let state = Simulation::new(&cfg, 0)?.snapshot();
    println!(
        "simulated Bitcoin-like state, shares renormalized: HHI {:.1}",
        hhi(&state, "power")?
    );
    Ok(())
}
