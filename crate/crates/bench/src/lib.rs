//! Workload fixtures shared by the criterion benches.

use lsvi_ae::env::{build_frozen_lake_from_map, build_synthetic_linear, FeatureMap, GridMap, TabularCmdp};
use lsvi_ae::experiment::{AgentSettings, Runner};
use lsvi_ae::rng::{stream_rng, Stream};
use lsvi_ae::{CostModel, FeatureVec, GpCostModel, Kernel, LinearCostModel, LsviLearner, PenaltyMode, Result};
use rand::Rng;

/// Points drawn uniformly from the unit ball of `R^dim`.
pub fn ball_points(seed: u64, n: usize, dim: usize) -> Vec<FeatureVec> {
    let mut rng = stream_rng(seed, Stream::Auxiliary);
    (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            let radius: f64 = rng.random_range(0.0..=1.0);
            FeatureVec::new(raw.iter().map(|x| x * radius / norm).collect())
        })
        .collect()
}

/// A CMDP with a learner that has already ingested `episodes` episodes of
/// LSVI-AE play.
pub struct WarmLearner {
    pub cmdp: TabularCmdp,
    pub features: FeatureMap,
    pub learner: LsviLearner,
    pub cost_lcb: Vec<Vec<f64>>,
    pub z: Vec<f64>,
}

fn warm_up(cmdp: TabularCmdp, features: FeatureMap, episodes: usize, lambda: f64, beta: f64) -> Result<WarmLearner> {
    let horizon = cmdp.horizon();
    let settings = AgentSettings {
        mode: PenaltyMode::Rectified,
        lambda,
        beta,
        cost_model: CostModel::Linear(LinearCostModel::new(features.dim(), horizon, lambda, 0.1)?),
        seed: 1,
        debug_rebuild: false,
    };
    let (learner, cost_lcb, z) = {
        let mut runner = Runner::new(&cmdp, &features, settings)?;
        runner.run(episodes)?;
        let k = runner.episodes_done() + 1;
        let cost_lcb = runner.cost_model().lcb_table(&features, k)?;
        (runner.learner().clone(), cost_lcb, runner.ledger().z().to_vec())
    };
    Ok(WarmLearner {
        cmdp,
        features,
        learner,
        cost_lcb,
        z,
    })
}

/// Synthetic linear CMDP with `d = 8`, `H = 5`.
pub fn warm_synthetic(episodes: usize) -> Result<WarmLearner> {
    let env = build_synthetic_linear(8, 5, 1)?;
    warm_up(env.cmdp, env.features, episodes, 1.0, 2.0)
}

/// Default 10×10 Frozen Lake with one-hot features (`d = 400`), `H = 15`.
pub fn warm_frozen_lake(episodes: usize) -> Result<WarmLearner> {
    let (cmdp, features) = build_frozen_lake_from_map(&GridMap::default_10x10(), 15)?;
    warm_up(cmdp, features, episodes, 0.01, 0.5)
}

/// GP estimator with `n` observations of a smooth cost at one step.
pub fn gp_with_observations(n: usize, dim: usize) -> Result<(GpCostModel, Vec<FeatureVec>)> {
    let kernel = Kernel::SquaredExponential { lengthscale: 0.5 };
    let mut model = GpCostModel::new(kernel, 1, n.max(1), 0.1)?;
    let points = ball_points(7, n, dim);
    for y in &points {
        let cost = (3.0 * y.values()[0]).sin() * 0.9;
        model.observe(0, y, cost)?;
    }
    Ok((model, points))
}
