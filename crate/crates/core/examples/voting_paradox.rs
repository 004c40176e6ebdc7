//! Three voters with weights 45%, 40% and 15% and a 51% threshold. Every
//! voter is pivotal in exactly two coalitions, so all three hold the same
//! voting power despite very different weights.

use presto_sim::metrics::decentralization::banzhaf_index;
use presto_sim::metrics::pivotality;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let weights = [0.45, 0.40, 0.15];
    let counts = pivotality(&weights, 0.51)?;
    let power = banzhaf_index(&weights, 0.51)?;
    for ((w, c), b) in weights.iter().zip(&counts).zip(&power) {
        println!("weight {w:.2}: pivotal in {c} coalitions, Banzhaf power {b:.3}");
    }

    // Once one voter passes the threshold alone, the others lose all power.
    let counts = pivotality(&[0.55, 0.30, 0.15], 0.51)?;
    println!("weights (0.55, 0.30, 0.15): {counts:?}");
    Ok(())
}
