//! Hard linear CMDP used for lower bounds on regret and violation.
//!
//! States `x_1 … x_{H+2}` are stored as ids `0 … H+1`; `x_{H+1}` (id `H`) and
//! `x_{H+2}` (id `H+1`) are absorbing and only `x_{H+2}` pays reward. Actions
//! are the sign vectors `{−1,+1}^{d−1}`, action id `i` having coordinate `j`
//! equal to `+1` iff bit `j` of `i` is set. From `x_i` at step `h` the chain
//! jumps to `x_{H+2}` with probability `δ + ⟨u_h, a⟩` and moves on to
//! `x_{i+1}` otherwise, with `δ = 1/H` and `u_h = Δ·signs_h`,
//! `Δ = √(δ/K)/(4√2)`. The only safe action at a transient state is
//! `argmax_a ⟨u_h, a⟩ = signs_h`.
//!
//! Features have dimension `d + 1`: `(α, β·a, 0)` for transient states and
//! `(0, 0, 1)` for `x_{H+2}`, with `α² + (d−1)β² = 1`.

use super::{CostNoise, FeatureMap, TableBuilder, TabularCmdp};
use crate::error::{Error, Result};
use crate::features::FeatureVec;

/// Largest `d − 1` accepted; caps the action set at 4096 sign vectors.
pub const MAX_SIGN_DIM: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct HardInstanceParams {
    pub dim: usize,
    pub horizon: usize,
    pub episodes: usize,
    /// One sign vector in `{−1,+1}^{d−1}` per step.
    pub u_signs: Vec<Vec<i8>>,
}

#[derive(Clone, Debug)]
pub struct HardInstance {
    pub cmdp: TabularCmdp,
    pub features: FeatureMap,
    pub delta: f64,
    pub gap: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `μ_h` as a `(d+1) × (H+2)` matrix per step, stored `[h][state][coord]`.
    pub mu: Vec<Vec<Vec<f64>>>,
    /// Reward parameter `θ_h = (0, …, 0, 1)`, identical for all steps.
    pub theta: Vec<f64>,
    pub params: HardInstanceParams,
}

/// Coordinate `j` of action `index` as ±1.
pub fn action_sign(index: usize, j: usize) -> f64 {
    if index >> j & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

fn sign_index(signs: &[i8]) -> usize {
    signs
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > 0)
        .fold(0, |acc, (j, _)| acc | (1 << j))
}

pub fn build_hard_instance(params: &HardInstanceParams) -> Result<HardInstance> {
    let HardInstanceParams {
        dim,
        horizon,
        episodes,
        ref u_signs,
    } = *params;
    if dim < 4 || horizon < 3 {
        return Err(Error::InvalidParameter(format!(
            "hard instance needs d >= 4 and H >= 3, got d={dim}, H={horizon}"
        )));
    }
    let m = dim - 1;
    if m > MAX_SIGN_DIM {
        return Err(Error::InvalidParameter(format!(
            "d - 1 = {m} exceeds the action-set cap of {MAX_SIGN_DIM}"
        )));
    }
    let (d, h_f, k_f) = (dim as f64, horizon as f64, episodes as f64);
    let k_min_1 = (d - 1.0).powi(2) * h_f / 2.0;
    let k_min_2 = (d - 1.0) / (32.0 * h_f * (d.sqrt() - 1.0));
    if k_f < k_min_1 || k_f < k_min_2 {
        return Err(Error::InvalidParameter(format!(
            "K = {episodes} below max{{(d-1)^2 H/2, (d-1)/(32H(sqrt d - 1))}} = {}",
            k_min_1.max(k_min_2)
        )));
    }
    if u_signs.len() != horizon
        || u_signs
            .iter()
            .any(|u| u.len() != m || u.iter().any(|s| *s != 1 && *s != -1))
    {
        return Err(Error::InvalidParameter(format!(
            "u_signs must hold {horizon} vectors in {{-1,+1}}^{m}"
        )));
    }

    let delta = 1.0 / h_f;
    let gap = (delta / k_f).sqrt() / (4.0 * 2f64.sqrt());
    let max_tilt = m as f64 * gap;
    if delta + max_tilt > 1.0 || delta - max_tilt < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta ± (d-1)Δ = {delta} ± {max_tilt} leaves [0, 1]"
        )));
    }
    let alpha = (1.0 / (1.0 + gap * (d - 1.0))).sqrt();
    let beta = (gap / (1.0 + gap * (d - 1.0))).sqrt();

    let num_states = horizon + 2;
    let num_actions = 1usize << m;
    let stuck = horizon; // x_{H+1}
    let sink = horizon + 1; // x_{H+2}

    let mut tables = TableBuilder::new(num_states, num_actions, horizon);
    for (h, signs) in u_signs.iter().enumerate() {
        let u: Vec<f64> = signs.iter().map(|s| gap * f64::from(*s)).collect();
        let best = sign_index(signs);
        for s in 0..num_states {
            for a in 0..num_actions {
                let row = tables.row_mut(h, s, a);
                if s == stuck || s == sink {
                    row[s] = 1.0;
                } else {
                    let tilt: f64 = (0..m).map(|j| u[j] * action_sign(a, j)).sum();
                    let p_sink = delta + tilt;
                    row[sink] = p_sink;
                    row[s + 1] += 1.0 - p_sink;
                }
                let reward = if s == sink { 1.0 } else { 0.0 };
                let cost = if s == stuck || s == sink || a == best { 0.0 } else { 1.0 };
                tables.set(h, s, a, reward, cost);
            }
        }
    }
    let cmdp = tables.finish(CostNoise::None, 0)?;

    let fdim = dim + 1;
    let mut table = Vec::with_capacity(num_states * num_actions);
    for s in 0..num_states {
        for a in 0..num_actions {
            let mut v = vec![0.0; fdim];
            if s == sink {
                v[fdim - 1] = 1.0;
            } else {
                v[0] = alpha;
                for j in 0..m {
                    v[1 + j] = beta * action_sign(a, j);
                }
            }
            table.push(FeatureVec::new(v));
        }
    }
    let features = FeatureMap::new(fdim, num_actions, table)?;

    let mut mu = Vec::with_capacity(horizon);
    for (h, signs) in u_signs.iter().enumerate() {
        let mut per_state = vec![vec![0.0; fdim]; num_states];
        let next = h + 1;
        per_state[next][0] = (1.0 - delta) / alpha;
        per_state[sink][0] = delta / alpha;
        for (j, sign) in signs.iter().enumerate() {
            let uj = gap * f64::from(*sign);
            per_state[next][1 + j] = -uj / beta;
            per_state[sink][1 + j] = uj / beta;
        }
        per_state[sink][fdim - 1] = 1.0;
        mu.push(per_state);
    }
    let mut theta = vec![0.0; fdim];
    theta[fdim - 1] = 1.0;

    Ok(HardInstance {
        cmdp,
        features,
        delta,
        gap,
        alpha,
        beta,
        mu,
        theta,
        params: params.clone(),
    })
}

impl HardInstance {
    /// States from which step `h` can actually be taken: `x_{h+1}` (id `h`)
    /// and the absorbing sink. The linear parametrization describes the
    /// kernel exactly on these pairs.
    pub fn reachable_states(&self, h: usize) -> [usize; 2] {
        [h, self.cmdp.num_states() - 1]
    }
}
