#![allow(dead_code)]

use lsvi_ae::env::{CostNoise, EpisodeTrace, FeatureMap, TabularCmdp};
use lsvi_ae::rng::{stream_rng, Stream};
use lsvi_ae::FeatureVec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random CMDP with a guaranteed safe action at every `(h, s)` and costs
/// bounded away from zero.
pub fn random_cmdp(seed: u64, num_states: usize, num_actions: usize, horizon: usize) -> TabularCmdp {
    let mut rng = stream_rng(seed, Stream::Auxiliary);
    let sa = horizon * num_states * num_actions;
    let mut transition = Vec::with_capacity(sa * num_states);
    let mut reward = Vec::with_capacity(sa);
    let mut cost = Vec::with_capacity(sa);
    for _ in 0..horizon {
        for _ in 0..num_states {
            let safe = rng.random_range(0..num_actions);
            for a in 0..num_actions {
                let raw: Vec<f64> = (0..num_states).map(|_| rng.random::<f64>() + 1e-3).collect();
                let total: f64 = raw.iter().sum();
                transition.extend(raw.iter().map(|x| x / total));
                reward.push(rng.random::<f64>());
                let g: f64 = if a == safe {
                    -rng.random_range(0.01..1.0)
                } else {
                    let mag = rng.random_range(0.01..1.0);
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                };
                cost.push(g);
            }
        }
    }
    fix_rows(&mut transition, num_states);
    TabularCmdp::new(
        num_states,
        num_actions,
        horizon,
        transition,
        reward,
        cost,
        CostNoise::None,
        0,
    )
    .unwrap()
}

/// Pushes the roundoff of each normalized row into its last entry.
fn fix_rows(transition: &mut [f64], num_states: usize) {
    for row in transition.chunks_mut(num_states) {
        let head: f64 = row[..num_states - 1].iter().sum();
        row[num_states - 1] = 1.0 - head;
    }
}

pub fn dense(phi: &FeatureVec) -> DVector<f64> {
    DVector::from_column_slice(phi.values())
}

pub fn random_unit(rng: &mut impl Rng, dim: usize) -> FeatureVec {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    FeatureVec::new(v.into_iter().map(|x| x / n).collect())
}

/// Output of the reference backward pass.
pub struct ReferencePass {
    pub weights: Vec<DVector<f64>>,
    pub q: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub actions: Vec<Vec<usize>>,
}

/// Straight-line backward pass: for each step, rebuild `Λ` and the target
/// sum from the raw history with dense algebra, invert by LU, and pick the
/// penalized argmax by a first-strictly-greater scan.
pub fn reference_backward(
    history: &[EpisodeTrace],
    features: &FeatureMap,
    horizon: usize,
    lambda: f64,
    beta: f64,
    g_hat: &[Vec<f64>],
    z: &[f64],
) -> ReferencePass {
    let d = features.dim();
    let n_s = features.num_states();
    let n_a = features.num_actions();
    let mut weights = vec![DVector::zeros(d); horizon];
    let mut q = vec![vec![0.0; n_s * n_a]; horizon];
    let mut values = vec![vec![0.0; n_s]; horizon + 1];
    let mut actions = vec![vec![0; n_s]; horizon];
    for h in (0..horizon).rev() {
        let mut gram = DMatrix::<f64>::identity(d, d) * lambda;
        let mut b = DVector::<f64>::zeros(d);
        for trace in history {
            let step = &trace.steps[h];
            let phi = dense(features.get(step.state, step.action));
            gram += &phi * phi.transpose();
            let next_value = if h + 1 < horizon {
                values[h + 1][step.next_state]
            } else {
                0.0
            };
            b += &phi * (step.reward + next_value);
        }
        let inv = gram.clone().lu().try_inverse().unwrap();
        let w = &inv * &b;
        for s in 0..n_s {
            let mut best_a = 0;
            let mut best = f64::NEG_INFINITY;
            for a in 0..n_a {
                let phi = dense(features.get(s, a));
                let bonus = (phi.transpose() * &inv * &phi)[(0, 0)].max(0.0).sqrt();
                let value = (w.dot(&phi) + beta * bonus).min(horizon as f64);
                q[h][s * n_a + a] = value;
                let g = g_hat[h][s * n_a + a];
                let obj = value - z[h] * if g > 0.0 { g } else { 0.0 };
                if obj > best {
                    best = obj;
                    best_a = a;
                }
            }
            actions[h][s] = best_a;
            values[h][s] = q[h][s * n_a + best_a];
        }
        weights[h] = w;
    }
    values.truncate(horizon);
    ReferencePass {
        weights,
        q,
        values,
        actions,
    }
}
