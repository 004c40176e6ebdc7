use presto_sim::scenario::{presets, ScenarioConfig, WorkloadConfig};
use presto_sim::simnet::trace::RecordKind;
use presto_sim::strategies::incentive::incentive_check;
use presto_sim::strategies::utility::{estimate_all, UtilityModel};
use presto_sim::strategies::StrategySpec;
use presto_sim::{run, NodeId};
use proptest::prelude::*;

#[test]
fn honest_nodes_publish_every_block_at_once() {
    let cfg = ScenarioConfig::nakamoto(&[0.5, 0.3, 0.2]).with_horizon(100_000.0);
    let trace = run(&cfg, cfg.horizon, 5).unwrap();
    let mut mined = 0;
    for r in trace.records.iter().filter(|r| r.kind == RecordKind::BlockMined) {
        let Some(b) = &r.extra.created else { continue };
        mined += 1;
        let sent: u64 = r
            .extra
            .sends
            .iter()
            .filter(|s| s.kind == "block" && s.block == Some(b.id))
            .map(|s| s.count)
            .sum();
        assert_eq!(sent, 2, "block {} sent to {sent} peers", b.id);
    }
    assert!(mined > 50);
}

#[test]
fn ibft_proposals_leave_in_the_same_step() {
    let cfg = ScenarioConfig::ibft(4).with_horizon(30.0);
    let trace = run(&cfg, cfg.horizon, 0).unwrap();
    for r in trace.records.iter().filter(|r| r.kind == RecordKind::ProposalDue) {
        if let Some(b) = &r.extra.created {
            assert!(r
                .extra
                .sends
                .iter()
                .any(|s| s.kind == "proposal" && s.block == Some(b.id)));
        }
    }
}

#[test]
fn playing_the_default_changes_nothing() {
    let cfg = presets::two_miners().with_horizon(200_000.0);
    let seeds: Vec<u64> = (0..6).collect();
    let r = incentive_check(&cfg, NodeId(1), &StrategySpec::Honest, &cfg.utility, &seeds).unwrap();
    assert_eq!(r.delta.mean, 0.0);
    assert_eq!(r.delta.std_err, 0.0);
    assert!(r.compatible);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn utility_is_linear_in_the_model(
        c in -5.0f64..5.0,
        seed in any::<u64>(),
        cost in 0.0f64..1e-3,
        bonus in 0.0f64..1.0,
    ) {
        let cfg = presets::two_miners().with_horizon(60_000.0).with_workload(WorkloadConfig {
            tx_rate: 0.01,
            ..WorkloadConfig::default()
        });
        let trace = run(&cfg, cfg.horizon, seed).unwrap();
        let model = UtilityModel { cost_per_power: cost, consecutive_block_bonus: bonus, ..UtilityModel::default() };
        let base = estimate_all(&trace, &model).unwrap();
        let scaled = estimate_all(&trace, &model.scaled(c)).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert!((a * c - b).abs() <= 1e-12 * (1.0 + b.abs()), "{} vs {}", a * c, b);
        }
    }
}
