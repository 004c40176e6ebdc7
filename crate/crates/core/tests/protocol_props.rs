mod common;

use presto_sim::chain::{Block, BlockDag};
use presto_sim::metrics::audit_safety;
use presto_sim::metrics::efficiency::message_complexity;
use presto_sim::protocols::{fork_choice, ForkChoiceRule, Tiebreak};
use presto_sim::scenario::{presets, LatencyModel, ScenarioConfig};
use presto_sim::strategies::StrategySpec;
use presto_sim::{run, BlockId, NodeId};
use proptest::prelude::*;
use proptest::sample::Index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::ibft_messages;

/// A random tree with integer works, optionally scaled by `c`.
fn tree(parents: &[(Index, u8)], c: f64) -> (BlockDag, Vec<BlockId>) {
    let mut dag = BlockDag::with_genesis();
    let mut ids = vec![BlockId::GENESIS];
    for (i, (sel, w)) in parents.iter().enumerate() {
        let id = BlockId(i as u64 + 1);
        let parent = *sel.get(&ids);
        dag.add_block(Block::new(id, parent, 0.0, (*w as f64 + 1.0) * c, NodeId(0)))
            .unwrap();
        ids.push(id);
    }
    (dag, ids)
}

proptest! {
    #[test]
    fn fork_choice_picks_from_the_view(
        parents in prop::collection::vec((any::<Index>(), 0u8..4), 1..40),
        seed in any::<u64>(),
        uniform in any::<bool>(),
    ) {
        let (dag, ids) = tree(&parents, 1.0);
        let tiebreak = if uniform { Tiebreak::Uniform } else { Tiebreak::FirstSeen };
        let rule = ForkChoiceRule::MostWork { tiebreak };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let head = fork_choice(&dag, &ids, rule, &mut rng).unwrap();
        prop_assert!(ids.contains(&head));
        let best = ids.iter().map(|b| dag.cumulative_work(*b).unwrap()).fold(0.0, f64::max);
        prop_assert_eq!(dag.cumulative_work(head).unwrap(), best);
        if !uniform {
            // first-seen is a pure function of the seen order
            let again = fork_choice(&dag, &ids, rule, &mut ChaCha8Rng::seed_from_u64(seed ^ 1)).unwrap();
            prop_assert_eq!(head, again);
            let first = ids.iter().find(|b| dag.cumulative_work(**b).unwrap() == best).unwrap();
            prop_assert_eq!(head, *first);
        }
    }

    #[test]
    fn scaling_work_keeps_the_head(
        parents in prop::collection::vec((any::<Index>(), 0u8..4), 1..40),
        exp in -4i32..8,
        seed in any::<u64>(),
        uniform in any::<bool>(),
    ) {
        // powers of two keep the sums exact, so ties survive scaling
        let c = 2f64.powi(exp);
        let (a, ids) = tree(&parents, 1.0);
        let (b, _) = tree(&parents, c);
        let tiebreak = if uniform { Tiebreak::Uniform } else { Tiebreak::FirstSeen };
        let rule = ForkChoiceRule::MostWork { tiebreak };
        let ha = fork_choice(&a, &ids, rule, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let hb = fork_choice(&b, &ids, rule, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(ha, hb);
    }
}

#[test]
fn ibft_is_safe_with_up_to_f_faulty_keys() {
    for k in 1..=7usize {
        let f = (k - 1) / 3;
        for seed in 0..6u64 {
            let mut cfg = ScenarioConfig::ibft(k).with_horizon(60.0);
            cfg.network.latency = LatencyModel::Exponential { mean: 0.3 };
            for j in 0..f as u32 {
                let s = if (seed + j as u64).is_multiple_of(2) {
                    StrategySpec::Crashed
                } else {
                    StrategySpec::Withhold
                };
                cfg = cfg.with_strategy(k as u32 - 1 - j, s);
            }
            let trace = run(&cfg, cfg.horizon, seed).unwrap();
            let report = audit_safety(&trace, cfg.protocol.finality_rule()).unwrap();
            assert!(report.is_safe(), "k={k} seed={seed}: {:?}", report.violations);
        }
    }
}

#[test]
fn honest_majority_never_reverts_final_blocks() {
    for seed in 0..10u64 {
        let mut cfg = presets::two_miners().with_horizon(600_000.0);
        cfg.nakamoto_params_mut().unwrap().confirmations = 6;
        cfg.network.latency = LatencyModel::Exponential { mean: 10.0 };
        let trace = run(&cfg, cfg.horizon, seed).unwrap();
        assert!(
            audit_safety(&trace, cfg.protocol.finality_rule()).unwrap().is_safe(),
            "seed {seed}"
        );
    }
}

#[test]
fn ibft_message_counts_are_exact() {
    for k in 2..=9usize {
        let cfg = ScenarioConfig::ibft(k).with_horizon(40.0);
        let mc = message_complexity(&run(&cfg, cfg.horizon, 0).unwrap()).unwrap();
        assert!(mc.decisions > 0);
        for g in &mc.groups {
            assert_eq!(*g, ibft_messages(k as u64), "k={k}");
        }
    }
}
