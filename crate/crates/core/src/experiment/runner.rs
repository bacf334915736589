use rand_chacha::ChaCha8Rng;

use super::metrics::{EpisodeMetrics, Metrics};
use crate::cost::CostModel;
use crate::env::{EpisodeTrace, FeatureMap, TabularCmdp};
use crate::error::{Error, Result};
use crate::lsvi::{BackwardPassOutput, CostTable, LsviConfig, LsviLearner};
use crate::oracle::{constrained_dp, policy_eval, ValueTable};
use crate::rng::{stream_rng, Stream};
use crate::safety::{PenaltyLedger, PenaltyMode};

/// Learner-side settings of one run.
#[derive(Clone, Debug)]
pub struct AgentSettings {
    pub mode: PenaltyMode,
    pub lambda: f64,
    pub beta: f64,
    pub cost_model: CostModel,
    pub seed: u64,
    pub debug_rebuild: bool,
}

/// Everything that happened in one episode.
#[derive(Clone, Debug)]
pub struct EpisodeReport {
    /// 1-based episode index.
    pub k: usize,
    pub cost_lcb: CostTable,
    pub z_before: Vec<f64>,
    pub pass: BackwardPassOutput,
    pub trace: EpisodeTrace,
    pub z_after: Vec<f64>,
    pub metrics: EpisodeMetrics,
}

/// Episode loop: backward pass, rollout of the fixed episode policy,
/// cost-model updates per step, penalty update at the end.
pub struct Runner<'a> {
    cmdp: &'a TabularCmdp,
    features: &'a FeatureMap,
    learner: LsviLearner,
    cost_model: CostModel,
    ledger: PenaltyLedger,
    transitions: ChaCha8Rng,
    noise: ChaCha8Rng,
    optimal: ValueTable,
    k: usize,
}

impl<'a> Runner<'a> {
    pub fn new(cmdp: &'a TabularCmdp, features: &'a FeatureMap, settings: AgentSettings) -> Result<Self> {
        features.check_compatible(cmdp)?;
        let horizon = cmdp.horizon();
        if settings.cost_model.horizon() != horizon {
            return Err(Error::InvalidParameter(
                "cost model horizon differs from the CMDP".into(),
            ));
        }
        let mut config = LsviConfig::new(settings.lambda, settings.beta, horizon);
        config.debug_rebuild = settings.debug_rebuild;
        let (_, optimal) = constrained_dp(cmdp)?;
        Ok(Self {
            cmdp,
            features,
            learner: LsviLearner::new(config, features)?,
            cost_model: settings.cost_model,
            ledger: PenaltyLedger::new(settings.mode, horizon),
            transitions: stream_rng(settings.seed, Stream::Transitions),
            noise: stream_rng(settings.seed, Stream::CostNoise),
            optimal,
            k: 0,
        })
    }

    pub fn episodes_done(&self) -> usize {
        self.k
    }

    pub fn ledger(&self) -> &PenaltyLedger {
        &self.ledger
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost_model
    }

    pub fn learner(&self) -> &LsviLearner {
        &self.learner
    }

    /// Optimal safe values of the CMDP.
    pub fn optimal(&self) -> &ValueTable {
        &self.optimal
    }

    pub fn run_episode(&mut self) -> Result<EpisodeReport> {
        let k = self.k + 1;
        let horizon = self.cmdp.horizon();
        let penalized = self.ledger.mode() != PenaltyMode::Off;
        // With Z ≡ 0 the cost estimate never enters the decision.
        let cost_lcb = if penalized {
            self.cost_model.lcb_table(self.features, k)?
        } else {
            vec![vec![0.0; self.features.num_states() * self.features.num_actions()]; horizon]
        };
        if cost_lcb.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("cost estimates in episode {k}")));
        }
        let z_before = self.ledger.z().to_vec();
        let pass = self.learner.backward_pass(self.features, &cost_lcb, &z_before)?;
        if pass.q.iter().flatten().any(|q| !q.is_finite()) {
            return Err(Error::NonFinite(format!("Q-table in episode {k}")));
        }

        let policy = &pass.policy;
        let trace = self
            .cmdp
            .simulate(|h, s| policy.action(h, s), &mut self.transitions, &mut self.noise)?;
        if penalized {
            for (h, step) in trace.steps.iter().enumerate() {
                let phi = self.features.get(step.state, step.action);
                self.cost_model.observe(h, phi, step.observed_cost)?;
            }
        }
        self.learner.ingest(&trace, self.features)?;
        let costs: Vec<f64> = trace.steps.iter().map(|s| s.observed_cost).collect();
        self.ledger.end_episode(&costs, k)?;

        let scale = self.cmdp.reward_scale();
        let value = policy_eval(self.cmdp, policy)?.initial_value(self.cmdp);
        let mut hard_violation = 0.0;
        let mut soft_cost = 0.0;
        for (h, step) in trace.steps.iter().enumerate() {
            let g = self.cmdp.cost_mean(h, step.state, step.action);
            hard_violation += g.max(0.0);
            soft_cost += g;
        }
        let metrics = EpisodeMetrics {
            reward: scale * trace.steps.iter().map(|s| s.reward).sum::<f64>(),
            hard_violation,
            soft_cost,
            regret: scale * (self.optimal.initial_value(self.cmdp) - value),
        };
        self.k = k;
        Ok(EpisodeReport {
            k,
            cost_lcb,
            z_before,
            pass,
            trace,
            z_after: self.ledger.z().to_vec(),
            metrics,
        })
    }

    /// Runs `episodes` episodes and collects their metrics.
    pub fn run(&mut self, episodes: usize) -> Result<Metrics> {
        let mut metrics = Metrics {
            v_star: self.cmdp.reward_scale() * self.optimal.initial_value(self.cmdp),
            ..Default::default()
        };
        for _ in 0..episodes {
            let report = self.run_episode()?;
            metrics.push(report.metrics, report.z_after);
        }
        Ok(metrics)
    }
}
