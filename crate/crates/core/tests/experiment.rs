use lsvi_ae::env::build_alternating;
use lsvi_ae::experiment::{
    agent_settings, build_env, emit_results, fit_growth_exponent, run_experiment, write_csv, Agent, EnvKind,
    ExperimentConfig, Runner, CSV_HEADER,
};
use lsvi_ae::oracle::{constrained_dp, policy_eval};
use lsvi_ae::PenaltyMode;

fn small(env: EnvKind, agent: Agent, episodes: usize) -> ExperimentConfig {
    ExperimentConfig {
        env,
        agent,
        episodes,
        horizon: 4,
        dim: 4,
        seed: 5,
        ..ExperimentConfig::default()
    }
}

#[test]
fn runs_are_deterministic_in_the_seed() {
    let config = small(EnvKind::SyntheticLinear, Agent::LsviAe, 40);
    let a = run_experiment(&config).unwrap();
    let b = run_experiment(&config).unwrap();
    assert_eq!(write_csv(&a), write_csv(&b));
    assert_eq!(a.z_history, b.z_history);
    let other = run_experiment(&ExperimentConfig { seed: 6, ..config }).unwrap();
    assert_ne!(write_csv(&a), write_csv(&other));
}

#[test]
fn two_episode_csv_has_header_and_two_rows() {
    let metrics = run_experiment(&small(EnvKind::FrozenLake, Agent::Lsvi, 2)).unwrap();
    let csv = write_csv(&metrics);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[2].starts_with("2,"));
}

#[test]
fn csv_running_sums_match_per_episode_values() {
    let config = small(EnvKind::SyntheticLinear, Agent::LsviPrimal, 60);
    let metrics = run_experiment(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_results(&metrics, &config, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut violation = 0.0;
    for (i, line) in text.lines().skip(1).enumerate() {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[0] as usize, i + 1);
        violation += fields[2];
        assert!((fields[4] - violation).abs() < 1e-9 * (1.0 + violation));
        let regret: f64 = metrics.episodes[..=i].iter().map(|e| e.regret).sum();
        assert!((fields[3] - regret).abs() < 1e-9 * (1.0 + regret.abs()));
    }
    let config_text = std::fs::read_to_string(dir.path().join("config.txt")).unwrap();
    assert_eq!(ExperimentConfig::from_kv(&config_text).unwrap(), config);
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("total_violation"));
}

#[test]
fn hard_violation_dominates_soft_cost() {
    for env in [EnvKind::SyntheticLinear, EnvKind::FrozenLake, EnvKind::Alternating] {
        for agent in [Agent::LsviAe, Agent::Lsvi, Agent::LsviPrimal] {
            let metrics = run_experiment(&small(env, agent, 30)).unwrap();
            for e in &metrics.episodes {
                assert!(e.hard_violation >= e.soft_cost.max(0.0) - 1e-12);
            }
        }
    }
    // Alternating between ±1 costs cancels in the soft sum only.
    let primal = run_experiment(&small(EnvKind::Alternating, Agent::LsviPrimal, 200)).unwrap();
    assert!(primal.total_violation() > primal.total_soft_cost().max(0.0) + 1.0);
}

#[test]
fn single_episode_metrics_follow_the_trace() {
    let config = small(EnvKind::SyntheticLinear, Agent::LsviAe, 1);
    let (cmdp, features) = build_env(&config).unwrap();
    let mut runner = Runner::new(&cmdp, &features, agent_settings(&config, features.dim()).unwrap()).unwrap();
    let report = runner.run_episode().unwrap();
    assert_eq!(report.k, 1);
    assert_eq!(report.trace.len(), 4);
    assert_eq!(report.z_before, vec![1.0; 4]);

    let scale = cmdp.reward_scale();
    let reward: f64 = report.trace.steps.iter().map(|s| s.reward).sum();
    assert!((report.metrics.reward - scale * reward).abs() < 1e-12);
    let hard: f64 = report
        .trace
        .steps
        .iter()
        .enumerate()
        .map(|(h, s)| cmdp.cost_mean(h, s.state, s.action).max(0.0))
        .sum();
    assert!((report.metrics.hard_violation - hard).abs() < 1e-12);

    let (_, optimal) = constrained_dp(&cmdp).unwrap();
    let value = policy_eval(&cmdp, &report.pass.policy).unwrap();
    let regret = scale * (optimal.initial_value(&cmdp) - value.initial_value(&cmdp));
    assert!((report.metrics.regret - regret).abs() < 1e-12);
    for (h, z) in report.z_after.iter().enumerate() {
        let observed = report.trace.steps[h].observed_cost;
        assert!((z - (1.0 + observed.max(0.0)).max(1.0)).abs() < 1e-12);
    }
}

#[test]
fn unconstrained_agent_keeps_zero_penalty() {
    let metrics = run_experiment(&small(EnvKind::SyntheticLinear, Agent::Lsvi, 20)).unwrap();
    assert!(metrics.z_history.iter().flatten().all(|z| *z == 0.0));
    assert_eq!(Agent::Lsvi.penalty_mode(), PenaltyMode::Off);
}

#[test]
fn hard_instance_runs_through_build_env() {
    let config = ExperimentConfig {
        env: EnvKind::HardInstance,
        dim: 4,
        horizon: 3,
        episodes: 1000,
        ..ExperimentConfig::default()
    };
    let (cmdp, features) = build_env(&config).unwrap();
    assert_eq!(features.dim(), 5);
    assert_eq!(cmdp.num_states(), 5);
    assert_eq!(cmdp.num_actions(), 8);
    let metrics = run_experiment(&config).unwrap();
    assert_eq!(metrics.len(), 1000);
    // Too few episodes for the construction.
    assert!(build_env(&ExperimentConfig { episodes: 5, ..config }).is_err());
}

#[test]
fn virtual_queue_settles_into_alternation() {
    let (cmdp, features) = build_alternating(4, 0.5).unwrap();
    let config = small(EnvKind::Alternating, Agent::LsviPrimal, 400);
    let mut runner = Runner::new(&cmdp, &features, agent_settings(&config, features.dim()).unwrap()).unwrap();
    let metrics = runner.run(400).unwrap();
    let exponent = fit_growth_exponent(&metrics.cum_violation()).unwrap();
    assert!(exponent >= 0.9, "exponent {exponent}");
    assert!(metrics.total_soft_cost().abs() <= 2.0 * 4.0);
}
