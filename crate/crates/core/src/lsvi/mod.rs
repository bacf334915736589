//! Regularized least-squares value iteration with a UCB bonus.

mod gram;

pub use gram::GramState;

use std::sync::Arc;

use log::{debug, log_enabled, Level};
use nalgebra::DVector;

use crate::cost::CostModel;
use crate::env::{EpisodeTrace, FeatureMap};
use crate::error::{invalid, Error, Result};
use crate::features::FeatureVec;
use crate::oracle::Policy;
use crate::safety::{penalized_argmax, PenaltyLedger};

/// Estimated costs `ĝ_h(s, a)`, indexed `[h][s·A + a]`.
pub type CostTable = Vec<Vec<f64>>;

/// Bonus scale `β = c·d·H·√ι` with `ι = ln(2dHK/p)`.
pub fn beta_schedule(c: f64, dim: usize, horizon: usize, episodes: usize, p: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(invalid(format!("beta constant must be positive, got {c}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("confidence level p must lie in (0, 1), got {p}")));
    }
    let ratio = 2.0 * dim as f64 * horizon as f64 * episodes as f64 / p;
    if ratio.is_nan() || ratio <= 1.0 {
        return Err(invalid(format!("2dHK/p = {ratio} must exceed 1")));
    }
    Ok(c * dim as f64 * horizon as f64 * ratio.ln().sqrt())
}

/// Learned weights and Gram inverse for one step.
#[derive(Clone, Debug)]
pub struct StepModel {
    pub weights: DVector<f64>,
    pub gram: Arc<GramState>,
}

/// Clipped optimistic Q-function `min{⟨w_h, φ⟩ + β‖φ‖_{Λ_h⁻¹}, H}`.
#[derive(Clone, Debug)]
pub struct QModel {
    beta: f64,
    cap: f64,
    steps: Vec<StepModel>,
}

impl QModel {
    pub fn new(beta: f64, cap: f64, steps: Vec<StepModel>) -> Self {
        Self { beta, cap, steps }
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn step(&self, h: usize) -> &StepModel {
        &self.steps[h]
    }

    pub fn weights(&self, h: usize) -> &DVector<f64> {
        &self.steps[h].weights
    }

    pub fn q_value(&self, h: usize, phi: &FeatureVec) -> f64 {
        let step = &self.steps[h];
        let linear = phi.dot(step.weights.as_slice());
        (linear + self.beta * step.gram.bonus_norm(phi)).min(self.cap)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsviConfig {
    pub lambda: f64,
    pub beta: f64,
    pub horizon: usize,
    /// Rebuild every Gram matrix from scratch on each backward pass and fail
    /// if the incremental inverse has drifted by more than 1e-8.
    pub debug_rebuild: bool,
}

impl LsviConfig {
    pub fn new(lambda: f64, beta: f64, horizon: usize) -> Self {
        Self {
            lambda,
            beta,
            horizon,
            debug_rebuild: false,
        }
    }
}

/// Everything produced by one backward pass.
#[derive(Clone, Debug)]
pub struct BackwardPassOutput {
    pub model: QModel,
    /// `Q_h(s, a)` indexed `[h][s·A + a]`.
    pub q: Vec<Vec<f64>>,
    /// `V_h(s) = Q_h(s, a_s)` with `a_s` the penalized argmax.
    pub values: Vec<Vec<f64>>,
    pub policy: Policy,
}

/// Visit counts of `(pair, next state)` for one step, kept in first-visit
/// order so that target sums are reproducible.
#[derive(Clone, Debug, Default)]
struct TransitionCounts {
    visited: Vec<usize>,
    next: Vec<Vec<(usize, u32)>>,
}

impl TransitionCounts {
    fn new(num_pairs: usize) -> Self {
        Self {
            visited: Vec::new(),
            next: vec![Vec::new(); num_pairs],
        }
    }

    fn record(&mut self, pair: usize, next_state: usize) {
        let slot = &mut self.next[pair];
        if slot.is_empty() {
            self.visited.push(pair);
        }
        match slot.iter_mut().find(|(s, _)| *s == next_state) {
            Some((_, n)) => *n += 1,
            None => slot.push((next_state, 1)),
        }
    }
}

/// Incremental LSVI state across episodes.
///
/// Gram matrices only grow, so they are updated with rank-1 steps as traces
/// arrive. Regression targets `r + V_{h+1}(x')` change every episode; they
/// are recomputed from the reward accumulator and the transition counts,
/// which makes a backward pass cost `O(visited pairs · nnz(φ))` per step on
/// top of the weight solve.
#[derive(Clone, Debug)]
pub struct LsviLearner {
    config: LsviConfig,
    num_states: usize,
    num_actions: usize,
    grams: Vec<Arc<GramState>>,
    reward_acc: Vec<DVector<f64>>,
    counts: Vec<TransitionCounts>,
    episodes: usize,
    /// Visited pairs per step, kept only for `debug_rebuild`.
    pair_log: Vec<Vec<usize>>,
}

impl LsviLearner {
    pub fn new(config: LsviConfig, features: &FeatureMap) -> Result<Self> {
        if config.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        if !(config.beta.is_finite() && config.beta >= 0.0) {
            return Err(invalid(format!("bonus scale must be nonnegative, got {}", config.beta)));
        }
        let dim = features.dim();
        let base = Arc::new(GramState::new(dim, config.lambda)?);
        let num_pairs = features.num_states() * features.num_actions();
        Ok(Self {
            config,
            num_states: features.num_states(),
            num_actions: features.num_actions(),
            grams: vec![base; config.horizon],
            reward_acc: vec![DVector::zeros(dim); config.horizon],
            counts: vec![TransitionCounts::new(num_pairs); config.horizon],
            episodes: 0,
            pair_log: vec![Vec::new(); config.horizon],
        })
    }

    pub fn config(&self) -> &LsviConfig {
        &self.config
    }

    /// Number of ingested episodes.
    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn gram(&self, h: usize) -> &GramState {
        &self.grams[h]
    }

    /// Adds one finished episode to the per-step regressions.
    pub fn ingest(&mut self, trace: &EpisodeTrace, features: &FeatureMap) -> Result<()> {
        if trace.len() != self.config.horizon {
            return Err(invalid(format!(
                "trace has {} steps, expected {}",
                trace.len(),
                self.config.horizon
            )));
        }
        for (h, step) in trace.steps.iter().enumerate() {
            if step.state >= self.num_states || step.action >= self.num_actions || step.next_state >= self.num_states {
                return Err(Error::OutOfRange(format!("trace step {h}: {step:?}")));
            }
            let pair = step.state * self.num_actions + step.action;
            let phi = features.pair(pair);
            Arc::make_mut(&mut self.grams[h]).add_feature(phi)?;
            for (i, v) in phi.nonzeros() {
                self.reward_acc[h][i] += v * step.reward;
            }
            self.counts[h].record(pair, step.next_state);
            if self.config.debug_rebuild {
                self.pair_log[h].push(pair);
            }
        }
        self.episodes += 1;
        Ok(())
    }

    /// Regression target vector `Σ φ (r + V_{h+1}(x'))` for step `h`.
    fn targets(&self, h: usize, features: &FeatureMap, next_values: Option<&[f64]>) -> DVector<f64> {
        let mut b = self.reward_acc[h].clone();
        if let Some(v) = next_values {
            let counts = &self.counts[h];
            for &pair in &counts.visited {
                let coeff: f64 = counts.next[pair].iter().map(|&(s, n)| f64::from(n) * v[s]).sum();
                if coeff != 0.0 {
                    for (i, x) in features.pair(pair).nonzeros() {
                        b[i] += x * coeff;
                    }
                }
            }
        }
        b
    }

    fn check_rebuild(&self, h: usize, features: &FeatureMap) -> Result<()> {
        let rebuilt = GramState::from_samples(
            features.dim(),
            self.config.lambda,
            self.pair_log[h].iter().map(|&p| (features.pair(p), 0.0)),
        )?;
        let drift = (self.grams[h].inverse() - rebuilt.inverse()).abs().max();
        if drift > 1e-8 {
            return Err(Error::Numerical(format!(
                "incremental Gram inverse at step {h} drifted by {drift:e}"
            )));
        }
        Ok(())
    }

    /// Backward pass for the next episode: for `h = H−1 … 0`, solve the ridge
    /// regression on targets `r + V_{h+1}(x')`, form the clipped optimistic
    /// Q-table, and back up `V_h(x) = Q_h(x, a_x)` through the penalized
    /// argmax `a_x = argmax_a Q_h(x,a) − Z_h·(ĝ_h(x,a))₊`.
    pub fn backward_pass(&self, features: &FeatureMap, cost_lcb: &CostTable, z: &[f64]) -> Result<BackwardPassOutput> {
        let horizon = self.config.horizon;
        let num_pairs = self.num_states * self.num_actions;
        if cost_lcb.len() != horizon || cost_lcb.iter().any(|row| row.len() != num_pairs) || z.len() != horizon {
            return Err(invalid("cost table or penalty vector has the wrong shape"));
        }
        let cap = horizon as f64;
        let mut steps: Vec<Option<StepModel>> = vec![None; horizon];
        let mut q = vec![Vec::new(); horizon];
        let mut values = vec![Vec::new(); horizon];
        let mut actions = vec![Vec::new(); horizon];

        for h in (0..horizon).rev() {
            if self.config.debug_rebuild {
                self.check_rebuild(h, features)?;
            }
            let gram = &self.grams[h];
            let next = if h + 1 < horizon {
                Some(values[h + 1].as_slice())
            } else {
                None
            };
            let b = self.targets(h, features, next);
            let weights = gram.solve(&b);
            if weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::NonFinite(format!("LSVI weights at step {h}")));
            }
            if log_enabled!(Level::Debug) {
                debug!(
                    "step {h}: |w| = {:.6e}, cond(Lambda) = {:.6e}",
                    weights.norm(),
                    gram.condition_number()
                );
            }
            let q_row: Vec<f64> = (0..num_pairs)
                .map(|pair| {
                    let phi = features.pair(pair);
                    (phi.dot(weights.as_slice()) + self.config.beta * gram.bonus_norm(phi)).min(cap)
                })
                .collect();
            let mut v_row = vec![0.0; self.num_states];
            let mut a_row = vec![0; self.num_states];
            for s in 0..self.num_states {
                let range = s * self.num_actions..(s + 1) * self.num_actions;
                let (a, _) = penalized_argmax(&q_row[range.clone()], &cost_lcb[h][range], z[h])?;
                a_row[s] = a;
                v_row[s] = q_row[s * self.num_actions + a];
            }
            steps[h] = Some(StepModel {
                weights,
                gram: Arc::clone(gram),
            });
            q[h] = q_row;
            values[h] = v_row;
            actions[h] = a_row;
        }
        let steps = steps.into_iter().map(|s| s.expect("every step filled")).collect();
        Ok(BackwardPassOutput {
            model: QModel::new(self.config.beta, cap, steps),
            q,
            values,
            policy: Policy::new(actions),
        })
    }
}

/// Inputs of a from-scratch backward pass.
pub struct BackwardPassInput<'a> {
    /// Episodes `1 … k−1`.
    pub history: &'a [EpisodeTrace],
    pub cost_model: &'a CostModel,
    pub ledger: &'a PenaltyLedger,
}

/// Backward pass for episode `k = history.len() + 1`, rebuilding every
/// regression from the raw history.
pub fn backward_pass(
    input: &BackwardPassInput<'_>,
    features: &FeatureMap,
    config: LsviConfig,
) -> Result<BackwardPassOutput> {
    let mut learner = LsviLearner::new(config, features)?;
    for trace in input.history {
        learner.ingest(trace, features)?;
    }
    let k = input.history.len() + 1;
    let lcb = input.cost_model.lcb_table(features, k)?;
    learner.backward_pass(features, &lcb, input.ledger.z())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::StepRecord;

    #[test]
    fn beta_examples() {
        let e = std::f64::consts::E;
        assert!((beta_schedule(1.0, 1, 1, 1, 2.0 / e).unwrap() - 1.0).abs() < 1e-15);
        let b1 = beta_schedule(1.0, 2, 3, 100, 0.1).unwrap();
        let b2 = beta_schedule(2.0, 2, 3, 100, 0.1).unwrap();
        assert!((b2 - 2.0 * b1).abs() < 1e-14);
        assert!(beta_schedule(1.0, 2, 3, 100, 0.0).is_err());
        assert!(beta_schedule(1.0, 2, 3, 100, 1.0).is_err());
        assert!(beta_schedule(0.0, 2, 3, 100, 0.5).is_err());
    }

    #[test]
    fn q_value_clips_at_cap() {
        let gram = Arc::new(GramState::new(2, 1.0).unwrap());
        let h = 3.0;
        let model = QModel::new(
            2.0 * h,
            h,
            vec![StepModel {
                weights: DVector::zeros(2),
                gram: Arc::clone(&gram),
            }],
        );
        assert_eq!(model.q_value(0, &FeatureVec::one_hot(2, 0)), h);

        let model = QModel::new(
            0.0,
            h,
            vec![StepModel {
                weights: DVector::from_vec(vec![1.0, 0.0]),
                gram,
            }],
        );
        assert_eq!(model.q_value(0, &FeatureVec::one_hot(2, 0)), 1.0);
    }

    #[test]
    fn empty_history_gives_pure_bonus() {
        let features = FeatureMap::one_hot(2, 2);
        let learner = LsviLearner::new(LsviConfig::new(1.0, 0.7, 3), &features).unwrap();
        let lcb = vec![vec![-1.0; 4]; 3];
        let out = learner.backward_pass(&features, &lcb, &[0.0; 3]).unwrap();
        for h in 0..3 {
            assert!(out.model.weights(h).iter().all(|w| *w == 0.0));
            for pair in 0..4 {
                assert!((out.q[h][pair] - 0.7).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn huge_penalty_backs_up_through_the_safe_action() {
        let features = FeatureMap::one_hot(1, 2);
        let mut learner = LsviLearner::new(LsviConfig::new(1.0, 0.0, 2), &features).unwrap();
        let step = |a: usize, r: f64| StepRecord {
            state: 0,
            action: a,
            reward: r,
            observed_cost: 0.0,
            next_state: 0,
        };
        for _ in 0..3 {
            learner
                .ingest(
                    &EpisodeTrace {
                        steps: vec![step(0, 1.0), step(0, 1.0)],
                    },
                    &features,
                )
                .unwrap();
            learner
                .ingest(
                    &EpisodeTrace {
                        steps: vec![step(1, 0.2), step(1, 0.2)],
                    },
                    &features,
                )
                .unwrap();
        }
        // action 0 is estimated unsafe, action 1 safe
        let lcb = vec![vec![0.5, -0.5]; 2];
        let out = learner.backward_pass(&features, &lcb, &[1e6, 1e6]).unwrap();
        assert_eq!(out.policy.action(1, 0), 1);
        assert_eq!(out.values[1][0], out.q[1][1]);
        assert_eq!(out.policy.action(0, 0), 1);

        let free = learner.backward_pass(&features, &lcb, &[0.0, 0.0]).unwrap();
        assert_eq!(free.policy.action(1, 0), 0);
        assert!(free.values[1][0] > out.values[1][0]);
    }

    #[test]
    fn rejects_mismatched_trace() {
        let features = FeatureMap::one_hot(1, 2);
        let mut learner = LsviLearner::new(LsviConfig::new(1.0, 0.0, 2), &features).unwrap();
        assert!(learner.ingest(&EpisodeTrace::default(), &features).is_err());
    }
}
