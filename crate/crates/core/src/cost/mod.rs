//! Lower-confidence cost estimators.
//!
//! Both estimators spend confidence `p/H` per step so that a union bound over
//! the horizon gives overall confidence `p`.

mod gp;
mod linear;

pub use gp::{gp_beta, GpCostModel, Kernel};
pub use linear::{tilde_beta, LinearCostModel};

use crate::env::FeatureMap;
use crate::error::{Error, Result};
use crate::features::FeatureVec;

/// Optimistic cost estimate `ĝ = mean − width`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostEstimate {
    pub lcb: f64,
    pub mean: f64,
    /// One-sided confidence bonus.
    pub width: f64,
    /// Two-sided error bound `2·width`.
    pub width_two_sided: f64,
}

impl CostEstimate {
    pub(crate) fn new(mean: f64, width: f64) -> Self {
        Self {
            lcb: mean - width,
            mean,
            width,
            width_two_sided: 2.0 * width,
        }
    }
}

/// How the confidence multiplier is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum WidthSchedule {
    /// The closed-form multiplier of each estimator.
    #[default]
    Theory,
    /// A constant multiplier, for tuned experiments.
    Fixed(f64),
}

impl WidthSchedule {
    pub(crate) fn validate(self) -> Result<Self> {
        match self {
            WidthSchedule::Fixed(b) if !(b.is_finite() && b >= 0.0) => Err(Error::InvalidParameter(format!(
                "fixed width multiplier must be nonnegative, got {b}"
            ))),
            other => Ok(other),
        }
    }
}

pub(crate) fn check_cost(cost: f64) -> Result<()> {
    if !(cost.is_finite() && cost.abs() <= 1.0) {
        return Err(Error::CostRange(cost));
    }
    Ok(())
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level p must lie in (0, 1), got {p}"
        )));
    }
    Ok(())
}

/// Either estimator behind one interface.
#[derive(Clone, Debug)]
pub enum CostModel {
    Linear(LinearCostModel),
    Gp(GpCostModel),
}

impl CostModel {
    pub fn horizon(&self) -> usize {
        match self {
            CostModel::Linear(m) => m.horizon(),
            CostModel::Gp(m) => m.horizon(),
        }
    }

    pub fn observe(&mut self, h: usize, phi: &FeatureVec, cost: f64) -> Result<()> {
        match self {
            CostModel::Linear(m) => m.observe(h, phi, cost),
            CostModel::Gp(m) => m.observe(h, phi, cost),
        }
    }

    /// Estimate for episode `k` (1-based).
    pub fn predict_lcb(&self, h: usize, phi: &FeatureVec, k: usize) -> Result<CostEstimate> {
        if h >= self.horizon() {
            return Err(Error::OutOfRange(format!(
                "step {h} outside horizon {}",
                self.horizon()
            )));
        }
        match self {
            CostModel::Linear(m) => m.predict_lcb(h, phi, k),
            CostModel::Gp(m) => m.predict_lcb(h, phi),
        }
    }

    /// `ĝ_h(s, a)` for every step and pair, indexed `[h][s·A + a]`.
    pub fn lcb_table(&self, features: &FeatureMap, k: usize) -> Result<Vec<Vec<f64>>> {
        (0..self.horizon())
            .map(|h| {
                features
                    .iter()
                    .map(|phi| self.predict_lcb(h, phi, k).map(|e| e.lcb))
                    .collect()
            })
            .collect()
    }
}
