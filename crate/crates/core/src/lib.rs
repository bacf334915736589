//! Safe episodic reinforcement learning under instantaneous hard constraints.
//!
//! The crate implements least-squares value iteration with aggressive
//! exploration (LSVI-AE): an optimistic linear Q-function estimate combined
//! with an optimistic (lower-confidence) cost estimate and an adaptive
//! rectified penalty that is floored by the episode index. Two baselines share
//! the same machinery: plain LSVI (no penalty) and LSVI-Primal (virtual-queue
//! dual update).
//!
//! Module map:
//! - [`env`]: tabular constrained MDPs with feature maps (Frozen Lake, a
//!   synthetic linear CMDP, the lower-bound hard instance, an alternating-cost
//!   instance) and episode simulation.
//! - [`lsvi`]: Gram-matrix state with rank-1 inverse updates, ridge weights,
//!   clipped optimistic Q-values and the backward pass.
//! - [`cost`]: linear and Gaussian-process lower-confidence cost estimators.
//! - [`safety`]: the penalty ledger and penalized action selection.
//! - [`oracle`]: exact constrained dynamic programming and brute-force checks.
//! - [`experiment`]: configuration, the episode loop, metrics and CSV output.

pub mod cost;
pub mod env;
pub mod error;
pub mod experiment;
pub mod features;
pub mod lsvi;
pub mod oracle;
pub mod rng;
pub mod safety;

pub use cost::{CostEstimate, CostModel, GpCostModel, Kernel, LinearCostModel, WidthSchedule};
pub use env::{CostNoise, EpisodeTrace, FeatureMap, StepRecord, TabularCmdp};
pub use error::{Error, Result};
pub use experiment::{run_experiment, Agent, ExperimentConfig, Metrics};
pub use features::FeatureVec;
pub use lsvi::{GramState, LsviLearner, QModel};
pub use oracle::{Policy, ValueTable};
pub use safety::{PenaltyLedger, PenaltyMode};
