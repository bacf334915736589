//! Tabular constrained MDPs with linear feature maps.
//!
//! Steps are indexed from 0 (`h ∈ 0..horizon`), states and actions are dense
//! ids. A [`TabularCmdp`] is the ground truth used for simulation and for the
//! exact oracles; the learner only sees the [`FeatureMap`], rewards and noisy
//! cost observations.

mod alternating;
mod frozen_lake;
mod hard;
mod synthetic;
pub mod text;

pub use alternating::build_alternating;
pub use frozen_lake::{build_frozen_lake, build_frozen_lake_from_map, Cell, GridMap, Move};
pub use hard::{build_hard_instance, HardInstance, HardInstanceParams};
pub use synthetic::{build_synthetic_linear, build_synthetic_linear_with, SyntheticLinear, SyntheticParams};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::features::FeatureVec;

/// Tolerance on transition rows summing to one.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Tolerance on feature norms (`‖φ‖ ≤ 1`).
pub const FEATURE_NORM_TOL: f64 = 1e-9;

/// Noise model for cost observations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CostNoise {
    None,
    /// Zero-mean Gaussian with the given standard deviation; observations are
    /// clipped to `[-1, 1]`.
    Gaussian {
        scale: f64,
    },
}

/// Finite-horizon constrained MDP stored as dense tables.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularCmdp {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    /// `[h][s][a][s']`, flattened.
    transition: Vec<f64>,
    /// `[h][s][a]`, flattened.
    reward: Vec<f64>,
    cost_mean: Vec<f64>,
    cost_noise: CostNoise,
    initial_state: usize,
    reward_scale: f64,
}

impl TabularCmdp {
    /// Builds and validates a CMDP, including the feasibility requirement that
    /// every `(h, s)` has an action with nonpositive mean cost.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        cost_mean: Vec<f64>,
        cost_noise: CostNoise,
        initial_state: usize,
    ) -> Result<Self> {
        let cmdp = Self::new_relaxed(
            num_states,
            num_actions,
            horizon,
            transition,
            reward,
            cost_mean,
            cost_noise,
            initial_state,
        )?;
        cmdp.check_feasible()?;
        Ok(cmdp)
    }

    /// Like [`TabularCmdp::new`] but skips the feasibility check. Only useful
    /// for exercising solver error paths.
    #[allow(clippy::too_many_arguments)]
    pub fn new_relaxed(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        cost_mean: Vec<f64>,
        cost_noise: CostNoise,
        initial_state: usize,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::InvalidEnv(format!(
                "empty dimensions: states={num_states} actions={num_actions} horizon={horizon}"
            )));
        }
        let sa = horizon * num_states * num_actions;
        if transition.len() != sa * num_states || reward.len() != sa || cost_mean.len() != sa {
            return Err(Error::InvalidEnv("table sizes do not match dimensions".into()));
        }
        if initial_state >= num_states {
            return Err(Error::InvalidEnv(format!("initial state {initial_state} out of range")));
        }
        if let CostNoise::Gaussian { scale } = cost_noise {
            if !(scale.is_finite() && scale >= 0.0) {
                return Err(Error::InvalidEnv(format!("noise scale {scale}")));
            }
        }
        for (i, row) in transition.chunks(num_states).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > ROW_SUM_TOL {
                let (h, s, a) = unflatten(i, num_states, num_actions);
                return Err(Error::InvalidEnv(format!(
                    "transition row (h={h}, s={s}, a={a}) is not a distribution (sum {sum})"
                )));
            }
        }
        if let Some(r) = reward.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidEnv(format!("reward {r} outside [0, 1]")));
        }
        if let Some(g) = cost_mean.iter().find(|g| !(-1.0..=1.0).contains(*g)) {
            return Err(Error::InvalidEnv(format!("cost {g} outside [-1, 1]")));
        }
        Ok(Self {
            num_states,
            num_actions,
            horizon,
            transition,
            reward,
            cost_mean,
            cost_noise,
            initial_state,
            reward_scale: 1.0,
        })
    }

    /// Multiplier mapping stored rewards back to the environment's native
    /// units (Frozen Lake stores rewards divided by 6).
    pub fn with_reward_scale(mut self, scale: f64) -> Self {
        self.reward_scale = scale;
        self
    }

    pub fn with_cost_noise(mut self, noise: CostNoise) -> Self {
        self.cost_noise = noise;
        self
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn cost_noise(&self) -> CostNoise {
        self.cost_noise
    }

    pub fn reward_scale(&self) -> f64 {
        self.reward_scale
    }

    fn sa_index(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.num_states + s) * self.num_actions + a
    }

    pub fn transition_row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let start = self.sa_index(h, s, a) * self.num_states;
        &self.transition[start..start + self.num_states]
    }

    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.reward[self.sa_index(h, s, a)]
    }

    pub fn cost_mean(&self, h: usize, s: usize, a: usize) -> f64 {
        self.cost_mean[self.sa_index(h, s, a)]
    }

    /// Actions with `cost_mean ≤ 0` at `(h, s)`.
    pub fn safe_actions(&self, h: usize, s: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_actions).filter(move |&a| self.cost_mean(h, s, a) <= 0.0)
    }

    pub fn check_feasible(&self) -> Result<()> {
        for h in 0..self.horizon {
            for s in 0..self.num_states {
                if self.safe_actions(h, s).next().is_none() {
                    return Err(Error::Infeasible { h, state: s });
                }
            }
        }
        Ok(())
    }

    pub fn check_indices(&self, h: usize, s: usize, a: usize) -> Result<()> {
        if h >= self.horizon || s >= self.num_states || a >= self.num_actions {
            return Err(Error::OutOfRange(format!(
                "(h={h}, s={s}, a={a}) for H={}, S={}, A={}",
                self.horizon, self.num_states, self.num_actions
            )));
        }
        Ok(())
    }

    /// Draws the next state by inverting the CDF of the transition row.
    pub fn sample_next_state<R: Rng + ?Sized>(&self, h: usize, s: usize, a: usize, rng: &mut R) -> usize {
        let row = self.transition_row(h, s, a);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (next, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_positive = next;
                if u < acc {
                    return next;
                }
            }
        }
        last_positive
    }

    /// Noisy cost observation `clip(g + ε, -1, 1)`.
    pub fn observe_cost<R: Rng + ?Sized>(&self, h: usize, s: usize, a: usize, rng: &mut R) -> f64 {
        let mean = self.cost_mean(h, s, a);
        match self.cost_noise {
            CostNoise::None => mean,
            CostNoise::Gaussian { scale } => {
                let eps: f64 = rng.sample(StandardNormal);
                (mean + scale * eps).clamp(-1.0, 1.0)
            }
        }
    }

    /// One environment step from `(h, state)` under `action`.
    pub fn step<R: Rng + ?Sized>(&self, state: usize, action: usize, h: usize, rng: &mut R) -> Result<Transition> {
        self.check_indices(h, state, action)?;
        let next_state = self.sample_next_state(h, state, action, rng);
        let observed_cost = self.observe_cost(h, state, action, rng);
        Ok(Transition {
            reward: self.reward(h, state, action),
            observed_cost,
            next_state,
        })
    }

    /// Simulates a full episode from the initial state. Next states and cost
    /// noise come from separate generators.
    pub fn simulate<P, R1, R2>(&self, mut policy: P, transitions: &mut R1, noise: &mut R2) -> Result<EpisodeTrace>
    where
        P: FnMut(usize, usize) -> usize,
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        let mut steps = Vec::with_capacity(self.horizon);
        let mut state = self.initial_state;
        for h in 0..self.horizon {
            let action = policy(h, state);
            self.check_indices(h, state, action)?;
            let next_state = self.sample_next_state(h, state, action, transitions);
            let observed_cost = self.observe_cost(h, state, action, noise);
            steps.push(StepRecord {
                state,
                action,
                reward: self.reward(h, state, action),
                observed_cost,
                next_state,
            });
            state = next_state;
        }
        Ok(EpisodeTrace { steps })
    }
}

fn unflatten(i: usize, num_states: usize, num_actions: usize) -> (usize, usize, usize) {
    let a = i % num_actions;
    let s = (i / num_actions) % num_states;
    let h = i / (num_actions * num_states);
    (h, s, a)
}

/// Result of [`TabularCmdp::step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub observed_cost: f64,
    pub next_state: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub observed_cost: f64,
    pub next_state: usize,
}

/// One episode, exactly `horizon` steps long.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<StepRecord>,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks the chaining invariant `next_state[h] == state[h + 1]`.
    pub fn is_consistent(&self, horizon: usize) -> bool {
        self.steps.len() == horizon && self.steps.windows(2).all(|w| w[0].next_state == w[1].state)
    }
}

/// Feature map `φ(s, a)` over a tabular state-action space.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    dim: usize,
    num_actions: usize,
    table: Vec<FeatureVec>,
}

impl FeatureMap {
    /// `table` is indexed by `s * num_actions + a`. Every vector must have
    /// Euclidean norm at most one.
    pub fn new(dim: usize, num_actions: usize, table: Vec<FeatureVec>) -> Result<Self> {
        if dim == 0 || num_actions == 0 || !table.len().is_multiple_of(num_actions) {
            return Err(Error::InvalidEnv("feature table shape".into()));
        }
        for f in &table {
            if f.dim() != dim {
                return Err(Error::InvalidEnv(format!(
                    "feature of dim {} in a {dim}-dim map",
                    f.dim()
                )));
            }
            let norm = f.norm();
            if !norm.is_finite() || norm > 1.0 + FEATURE_NORM_TOL {
                return Err(Error::FeatureNorm { norm });
            }
        }
        Ok(Self {
            dim,
            num_actions,
            table,
        })
    }

    /// One-hot map `φ(s, a) = e_{s·A + a}` with `d = S·A`.
    pub fn one_hot(num_states: usize, num_actions: usize) -> Self {
        let dim = num_states * num_actions;
        let table = (0..dim).map(|i| FeatureVec::one_hot(dim, i)).collect();
        Self {
            dim,
            num_actions,
            table,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_states(&self) -> usize {
        self.table.len() / self.num_actions
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, s: usize, a: usize) -> &FeatureVec {
        &self.table[s * self.num_actions + a]
    }

    pub fn pair(&self, index: usize) -> &FeatureVec {
        &self.table[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureVec> {
        self.table.iter()
    }

    pub fn check_compatible(&self, cmdp: &TabularCmdp) -> Result<()> {
        if self.num_actions != cmdp.num_actions() || self.num_states() != cmdp.num_states() {
            return Err(Error::InvalidEnv(format!(
                "feature map covers {}x{} pairs, CMDP has {}x{}",
                self.num_states(),
                self.num_actions,
                cmdp.num_states(),
                cmdp.num_actions()
            )));
        }
        Ok(())
    }
}

/// Helper for builders: allocate zeroed `[h][s][a](...)` tables.
pub(crate) struct TableBuilder {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub transition: Vec<f64>,
    pub reward: Vec<f64>,
    pub cost_mean: Vec<f64>,
}

impl TableBuilder {
    pub fn new(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        let sa = horizon * num_states * num_actions;
        Self {
            num_states,
            num_actions,
            horizon,
            transition: vec![0.0; sa * num_states],
            reward: vec![0.0; sa],
            cost_mean: vec![0.0; sa],
        }
    }

    pub fn index(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.num_states + s) * self.num_actions + a
    }

    pub fn row_mut(&mut self, h: usize, s: usize, a: usize) -> &mut [f64] {
        let start = self.index(h, s, a) * self.num_states;
        &mut self.transition[start..start + self.num_states]
    }

    pub fn set(&mut self, h: usize, s: usize, a: usize, reward: f64, cost: f64) {
        let i = self.index(h, s, a);
        self.reward[i] = reward;
        self.cost_mean[i] = cost;
    }

    pub fn finish(self, noise: CostNoise, initial_state: usize) -> Result<TabularCmdp> {
        TabularCmdp::new(
            self.num_states,
            self.num_actions,
            self.horizon,
            self.transition,
            self.reward,
            self.cost_mean,
            noise,
            initial_state,
        )
    }
}
