//! Experiment orchestration: configuration, environment construction, the
//! episode loop and result files.

mod config;
mod metrics;
mod output;
mod runner;

pub use config::{Agent, CostModelKind, EnvKind, ExperimentConfig, KernelKind};
pub use metrics::{fit_growth_exponent, EpisodeMetrics, Metrics};
pub use output::{emit_results, write_csv, CSV_HEADER};
pub use runner::{AgentSettings, EpisodeReport, Runner};

use rand::Rng;

use crate::cost::{CostModel, GpCostModel, LinearCostModel, WidthSchedule};
use crate::env::{
    build_alternating, build_frozen_lake_from_map, build_hard_instance, build_synthetic_linear_with, CostNoise,
    FeatureMap, GridMap, HardInstanceParams, SyntheticParams, TabularCmdp,
};
use crate::error::{Error, Result};
use crate::lsvi::beta_schedule;
use crate::rng::{stream_rng, Stream};

/// Builds the environment named by `config`.
pub fn build_env(config: &ExperimentConfig) -> Result<(TabularCmdp, FeatureMap)> {
    let horizon = config.horizon;
    match config.env {
        EnvKind::FrozenLake => {
            let map = match &config.map {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                        path: path.clone(),
                        source,
                    })?;
                    GridMap::parse(&text)?
                }
                None => GridMap::default_10x10(),
            };
            build_frozen_lake_from_map(&map, horizon)
        }
        EnvKind::SyntheticLinear => {
            let noise = if config.noise > 0.0 {
                CostNoise::Gaussian { scale: config.noise }
            } else {
                CostNoise::None
            };
            let env = build_synthetic_linear_with(&SyntheticParams {
                dim: config.dim,
                horizon,
                num_states: config.num_states,
                num_actions: config.num_actions,
                noise,
                seed: config.seed,
            })?;
            Ok((env.cmdp, env.features))
        }
        EnvKind::HardInstance => {
            let mut rng = stream_rng(config.seed, Stream::Builder);
            let u_signs = (0..horizon)
                .map(|_| {
                    (0..config.dim.saturating_sub(1))
                        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                        .collect()
                })
                .collect();
            let inst = build_hard_instance(&HardInstanceParams {
                dim: config.dim,
                horizon,
                episodes: config.episodes,
                u_signs,
            })?;
            Ok((inst.cmdp, inst.features))
        }
        EnvKind::Alternating => build_alternating(horizon, config.safe_reward),
    }
}

/// Learner settings implied by `config` for an environment with feature
/// dimension `dim`.
pub fn agent_settings(config: &ExperimentConfig, dim: usize) -> Result<AgentSettings> {
    config.validate()?;
    let beta = match config.beta_override {
        Some(b) => b,
        None => beta_schedule(config.c_beta, dim, config.horizon, config.episodes, config.p)?,
    };
    let schedule = config
        .cost_beta_override
        .map_or(WidthSchedule::Theory, WidthSchedule::Fixed);
    let cost_model = match config.cost_model {
        CostModelKind::Linear => CostModel::Linear(LinearCostModel::with_schedule(
            dim,
            config.horizon,
            config.lambda,
            config.p,
            schedule,
        )?),
        CostModelKind::Gp => CostModel::Gp(GpCostModel::with_schedule(
            config.kernel(),
            config.horizon,
            config.episodes,
            config.p,
            schedule,
        )?),
    };
    Ok(AgentSettings {
        mode: config.agent.penalty_mode(),
        lambda: config.lambda,
        beta,
        cost_model,
        seed: config.seed,
        debug_rebuild: false,
    })
}

/// Builds the environment, runs `K` episodes and returns the metrics.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Metrics> {
    config.validate()?;
    let (cmdp, features) = build_env(config)?;
    let settings = agent_settings(config, features.dim())?;
    log::info!(
        "running {} on {} with d={}, K={}, H={}, beta={:.6e}",
        config.agent.name(),
        config.env.name(),
        features.dim(),
        config.episodes,
        config.horizon,
        settings.beta
    );
    let mut runner = Runner::new(&cmdp, &features, settings)?;
    runner.run(config.episodes)
}
