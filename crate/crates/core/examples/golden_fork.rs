//! Replays the scripted three-node fork and prints how it unfolds.

use presto_sim::metrics::{detect_forks, detect_orphans, detect_overturns};
use presto_sim::scenario::presets;
use presto_sim::simnet::Simulation;
use presto_sim::{run, NodeId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = presets::fork_window();

    let mut sim = Simulation::new(&cfg, 0)?;
    sim.run_until(700.0)?;
    println!("state at t=700");
    for n in 0..3 {
        let node = sim.node(NodeId(n));
        let mut view: Vec<_> = node.seen_order().to_vec();
        view.sort();
        let view: Vec<String> = view.iter().map(|b| b.to_string()).collect();
        println!("  node {n}: head {} view {{{}}}", node.head, view.join(", "));
    }

    let trace = run(&cfg, cfg.horizon, 0)?;
    for f in detect_forks(&trace)? {
        let end = f.end.map_or("unresolved".to_string(), |e| e.to_string());
        println!("fork from {} to {end}", f.start);
    }
    for o in detect_overturns(&trace)? {
        println!("{} overturned by {} at {}", o.block, o.node, o.time);
    }
    let orphans: Vec<String> = detect_orphans(&trace)?.iter().map(|b| b.to_string()).collect();
    println!("orphans {{{}}}", orphans.join(", "));
    println!("trace checksum {}", trace.checksum());
    Ok(())
}
