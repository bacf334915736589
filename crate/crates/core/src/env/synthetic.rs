//! Random small CMDP that is exactly linear in its features.
//!
//! Features live on the probability simplex of `R^d`, so `‖φ‖₂ ≤ 1` and the
//! transition kernel `P(s'|s,a) = ⟨φ(s,a), μ(s')⟩` is a valid distribution
//! whenever each coordinate measure `μ_i` is one. Rewards and costs are
//! `⟨φ, θ_r,h⟩` and `⟨φ, θ_g,h⟩`. Coordinate 0 is a "safe direction" with
//! `θ_g,h[0] = -1`, and every state gets one action with at least 60% of its
//! feature mass on it, which makes that action's cost at most `-0.2`.
//! Rewards are tilted towards costly coordinates so that the constraint binds.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{CostNoise, FeatureMap, TableBuilder, TabularCmdp};
use crate::error::{Error, Result};
use crate::features::FeatureVec;
use crate::rng::{stream_rng, Stream};

/// Costs closer than this to zero are redrawn. The margin keeps the sign of
/// every cost identifiable from a few thousand noisy samples.
pub const COST_MARGIN: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticParams {
    pub dim: usize,
    pub horizon: usize,
    pub num_states: usize,
    pub num_actions: usize,
    pub noise: CostNoise,
    pub seed: u64,
}

impl SyntheticParams {
    pub fn new(dim: usize, horizon: usize, seed: u64) -> Self {
        Self {
            dim,
            horizon,
            num_states: 10,
            num_actions: 4,
            noise: CostNoise::Gaussian { scale: 0.1 },
            seed,
        }
    }
}

/// Synthetic CMDP with its ground-truth linear parameters.
#[derive(Clone, Debug)]
pub struct SyntheticLinear {
    pub cmdp: TabularCmdp,
    pub features: FeatureMap,
    /// `θ_g,h` per step.
    pub theta_cost: Vec<Vec<f64>>,
    /// `θ_r,h` per step.
    pub theta_reward: Vec<Vec<f64>>,
    /// `μ_i(s')`, indexed `[i][s']`; shared by all steps.
    pub mu: Vec<Vec<f64>>,
}

pub fn build_synthetic_linear(dim: usize, horizon: usize, seed: u64) -> Result<SyntheticLinear> {
    build_synthetic_linear_with(&SyntheticParams::new(dim, horizon, seed))
}

fn simplex_point(rng: &mut ChaCha8Rng, dim: usize, sharpness: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim)
        .map(|_| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            (-u.ln()).powf(sharpness)
        })
        .collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn build_synthetic_linear_with(params: &SyntheticParams) -> Result<SyntheticLinear> {
    let SyntheticParams {
        dim,
        horizon,
        num_states,
        num_actions,
        noise,
        seed,
    } = *params;
    if dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "synthetic CMDP needs d >= 2, got {dim}"
        )));
    }
    if horizon == 0 || num_states == 0 || num_actions == 0 {
        return Err(Error::InvalidParameter("empty synthetic CMDP".into()));
    }
    let mut rng = stream_rng(seed, Stream::Builder);

    let mut phis = Vec::with_capacity(num_states * num_actions);
    for _ in 0..num_states {
        let safe_action = rng.random_range(0..num_actions);
        for a in 0..num_actions {
            let mut phi = simplex_point(&mut rng, dim, 4.0);
            if a == safe_action {
                phi.iter_mut().for_each(|x| *x *= 0.4);
                phi[0] += 0.6;
            }
            phis.push(phi);
        }
    }
    let mu: Vec<Vec<f64>> = (0..dim).map(|_| simplex_point(&mut rng, num_states, 2.0)).collect();

    let mut theta_cost = Vec::with_capacity(horizon);
    let mut theta_reward = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let theta_g = loop {
            let mut theta: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            theta[0] = -1.0;
            let clear = phis.iter().all(|phi| {
                let g = dot(phi, &theta);
                g.abs() >= COST_MARGIN
            });
            if clear {
                break theta;
            }
        };
        let theta_r: Vec<f64> = theta_g
            .iter()
            .map(|g| 0.8 * 0.5 * (1.0 + g) + 0.2 * rng.random::<f64>())
            .collect();
        theta_cost.push(theta_g);
        theta_reward.push(theta_r);
    }

    let mut tables = TableBuilder::new(num_states, num_actions, horizon);
    for h in 0..horizon {
        for s in 0..num_states {
            for a in 0..num_actions {
                let phi = &phis[s * num_actions + a];
                let row = tables.row_mut(h, s, a);
                for (next, p) in row.iter_mut().enumerate() {
                    *p = phi.iter().zip(&mu).map(|(w, m)| w * m[next]).sum();
                }
                let reward = dot(phi, &theta_reward[h]);
                let cost = dot(phi, &theta_cost[h]);
                tables.set(h, s, a, reward, cost);
            }
        }
    }
    let cmdp = tables.finish(noise, 0)?;
    let features = FeatureMap::new(dim, num_actions, phis.into_iter().map(FeatureVec::new).collect())?;
    Ok(SyntheticLinear {
        cmdp,
        features,
        theta_cost,
        theta_reward,
        mu,
    })
}
