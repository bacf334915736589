mod common;

use common::random_cmdp;
use lsvi_ae::env::build_alternating;
use lsvi_ae::oracle::{brute_force_enumerate, constrained_dp, policy_eval, unconstrained_dp, ENUMERATION_CAP};
use lsvi_ae::rng::{stream_rng, Stream};
use lsvi_ae::{Error, Policy};
use proptest::prelude::*;

#[test]
fn dp_matches_brute_force_on_four_states() {
    for seed in 0..5 {
        let cmdp = random_cmdp(seed, 4, 3, 3);
        let (policy, values) = constrained_dp(&cmdp).unwrap();
        let (brute_policy, brute_value) = brute_force_enumerate(&cmdp, true).unwrap();
        assert!((values.initial_value(&cmdp) - brute_value).abs() < 1e-10);
        let replayed = policy_eval(&cmdp, &brute_policy).unwrap().initial_value(&cmdp);
        assert!((replayed - brute_value).abs() < 1e-12);
        for h in 0..3 {
            for s in 0..4 {
                assert!(cmdp.cost_mean(h, s, policy.action(h, s)) <= 0.0);
                assert!(cmdp.cost_mean(h, s, brute_policy.action(h, s)) <= 0.0);
            }
        }
    }
}

#[test]
fn monte_carlo_return_matches_policy_eval() {
    let cmdp = random_cmdp(21, 3, 2, 4);
    let (policy, _) = unconstrained_dp(&cmdp).unwrap();
    let exact = policy_eval(&cmdp, &policy).unwrap().initial_value(&cmdp);
    let mut transitions = stream_rng(21, Stream::Transitions);
    let mut noise = stream_rng(21, Stream::CostNoise);
    let episodes = 100_000;
    let mut total = 0.0;
    let mut total_sq = 0.0;
    for _ in 0..episodes {
        let trace = cmdp
            .simulate(|h, s| policy.action(h, s), &mut transitions, &mut noise)
            .unwrap();
        let ret: f64 = trace.steps.iter().map(|s| s.reward).sum();
        total += ret;
        total_sq += ret * ret;
    }
    let n = episodes as f64;
    let mean = total / n;
    let std_err = ((total_sq / n - mean * mean) / n).sqrt();
    assert!(
        (mean - exact).abs() < 5.0 * std_err.max(1e-4),
        "mc {mean} vs exact {exact}"
    );
}

#[test]
fn optimal_tables_satisfy_bellman_equations() {
    for seed in 0..10 {
        let cmdp = random_cmdp(seed, 5, 3, 4);
        let (_, safe) = constrained_dp(&cmdp).unwrap();
        let (_, free) = unconstrained_dp(&cmdp).unwrap();
        assert!(safe.bellman_residual(&cmdp) < 1e-12);
        assert!(free.bellman_residual(&cmdp) < 1e-12);
        assert!(safe.v[4].iter().all(|v| *v == 0.0));
    }
}

#[test]
fn alternating_instance_values() {
    let (cmdp, _) = build_alternating(4, 0.5).unwrap();
    let (safe_policy, safe) = constrained_dp(&cmdp).unwrap();
    let (_, free) = unconstrained_dp(&cmdp).unwrap();
    assert_eq!(safe_policy, Policy::constant(4, 1, 1));
    assert!((safe.initial_value(&cmdp) - 2.0).abs() < 1e-12);
    assert!((free.initial_value(&cmdp) - 4.0).abs() < 1e-12);
}

#[test]
fn enumeration_cap_is_enforced() {
    // 4^(10·3) policies.
    let cmdp = random_cmdp(1, 10, 4, 3);
    match brute_force_enumerate(&cmdp, false) {
        Err(Error::EnumerationCap { count, cap }) => {
            assert!(count > cap);
            assert_eq!(cap, ENUMERATION_CAP);
        }
        other => panic!("expected the enumeration cap, got {other:?}"),
    }
}

#[test]
fn policy_shape_is_checked() {
    let cmdp = random_cmdp(2, 3, 2, 2);
    assert!(policy_eval(&cmdp, &Policy::constant(3, 3, 0)).is_err());
    assert!(policy_eval(&cmdp, &Policy::constant(2, 3, 2)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn safe_value_never_exceeds_unconstrained(seed in any::<u64>(), s in 1usize..6, a in 1usize..4, h in 1usize..5) {
        let cmdp = random_cmdp(seed, s, a, h);
        let (_, safe) = constrained_dp(&cmdp).unwrap();
        let (_, free) = unconstrained_dp(&cmdp).unwrap();
        for step in 0..=h {
            for state in 0..s {
                prop_assert!(safe.v[step][state] <= free.v[step][state] + 1e-12);
            }
        }
    }

    #[test]
    fn dp_dominates_every_policy(seed in any::<u64>(), actions in proptest::collection::vec(0usize..3, 12)) {
        let cmdp = random_cmdp(seed, 4, 3, 3);
        let policy = Policy::new(actions.chunks(4).map(|c| c.to_vec()).collect());
        let value = policy_eval(&cmdp, &policy).unwrap();
        let (_, free) = unconstrained_dp(&cmdp).unwrap();
        for h in 0..=3 {
            for s in 0..4 {
                prop_assert!(value.v[h][s] <= free.v[h][s] + 1e-12);
            }
        }
    }
}
