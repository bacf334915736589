use std::sync::Arc;

use nalgebra::DVector;

use super::{check_cost, check_p, CostEstimate, WidthSchedule};
use crate::error::{invalid, Result};
use crate::features::FeatureVec;
use crate::lsvi::GramState;

/// `β̃ = √(λd) + √(d·ln((1 + k/λ)/p))`.
pub fn tilde_beta(lambda: f64, dim: usize, k: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid(format!("ridge parameter must be positive, got {lambda}")));
    }
    let d = dim as f64;
    let log_term = ((1.0 + k as f64 / lambda) / p).ln();
    Ok((lambda * d).sqrt() + (d * log_term).sqrt())
}

/// Ridge estimate of a cost that is linear in the features, with
/// `ĝ = ⟨φ, θ̂_h⟩ − β̃(p/H)·‖φ‖_{Λ_h⁻¹}`.
#[derive(Clone, Debug)]
pub struct LinearCostModel {
    grams: Vec<Arc<GramState>>,
    theta: Vec<DVector<f64>>,
    p: f64,
    schedule: WidthSchedule,
}

impl LinearCostModel {
    pub fn new(dim: usize, horizon: usize, lambda: f64, p: f64) -> Result<Self> {
        Self::with_schedule(dim, horizon, lambda, p, WidthSchedule::Theory)
    }

    pub fn with_schedule(dim: usize, horizon: usize, lambda: f64, p: f64, schedule: WidthSchedule) -> Result<Self> {
        check_p(p)?;
        if horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        let base = Arc::new(GramState::new(dim, lambda)?);
        Ok(Self {
            grams: vec![base; horizon],
            theta: vec![DVector::zeros(dim); horizon],
            p,
            schedule: schedule.validate()?,
        })
    }

    pub fn horizon(&self) -> usize {
        self.grams.len()
    }

    pub fn dim(&self) -> usize {
        self.grams[0].dim()
    }

    pub fn lambda(&self) -> f64 {
        self.grams[0].lambda()
    }

    pub fn gram(&self, h: usize) -> &GramState {
        &self.grams[h]
    }

    /// `θ̂_h = Λ_h⁻¹ Σ φ·g`.
    pub fn theta(&self, h: usize) -> &DVector<f64> {
        &self.theta[h]
    }

    pub fn observe(&mut self, h: usize, phi: &FeatureVec, cost: f64) -> Result<()> {
        check_cost(cost)?;
        if h >= self.horizon() {
            return Err(invalid(format!("step {h} outside horizon {}", self.horizon())));
        }
        let gram = Arc::make_mut(&mut self.grams[h]);
        gram.update(phi, cost)?;
        self.theta[h] = gram.ridge_weights();
        Ok(())
    }

    /// Confidence multiplier at episode `k`.
    pub fn multiplier(&self, k: usize) -> Result<f64> {
        match self.schedule {
            WidthSchedule::Theory => tilde_beta(self.lambda(), self.dim(), k, self.p / self.horizon() as f64),
            WidthSchedule::Fixed(b) => Ok(b),
        }
    }

    pub fn predict_lcb(&self, h: usize, phi: &FeatureVec, k: usize) -> Result<CostEstimate> {
        let mean = phi.dot(self.theta[h].as_slice());
        let width = self.multiplier(k)? * self.grams[h].bonus_norm(phi);
        Ok(CostEstimate::new(mean, width))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilde_beta_closed_form() {
        let e = std::f64::consts::E;
        assert!((tilde_beta(1.0, 1, 0, 1.0 / e).unwrap() - 2.0).abs() < 1e-15);
        let expected = 2.0 + (4.0 * (101.0f64 / 0.05).ln()).sqrt();
        assert!((tilde_beta(1.0, 4, 100, 0.05).unwrap() - expected).abs() < 1e-13);
        assert!(tilde_beta(1.0, 4, 100, 1.0).is_err());
        assert!(tilde_beta(0.0, 4, 100, 0.5).is_err());
    }

    #[test]
    fn tilde_beta_monotone_in_k() {
        let mut prev = 0.0;
        for k in 0..200 {
            let b = tilde_beta(0.7, 3, k, 0.1).unwrap();
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn empty_model_is_pure_bonus() {
        let m = LinearCostModel::new(3, 2, 1.0, 0.1).unwrap();
        let phi = FeatureVec::new(vec![0.6, 0.8, 0.0]);
        let est = m.predict_lcb(1, &phi, 5).unwrap();
        let b = tilde_beta(1.0, 3, 5, 0.05).unwrap();
        assert_eq!(est.mean, 0.0);
        assert!((est.lcb + b).abs() < 1e-14);
        assert!((est.width_two_sided - 2.0 * b).abs() < 1e-14);

        let zero = m.predict_lcb(0, &FeatureVec::zeros(3), 5).unwrap();
        assert_eq!((zero.lcb, zero.mean, zero.width), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_sample_fit() {
        let mut m = LinearCostModel::new(2, 1, 1.0, 0.1).unwrap();
        m.observe(0, &FeatureVec::one_hot(2, 0), 1.0).unwrap();
        assert_eq!(m.theta(0).as_slice(), &[0.5, 0.0]);
        assert!(m.observe(0, &FeatureVec::one_hot(2, 0), 1.5).is_err());
    }

    #[test]
    fn fixed_schedule_overrides_multiplier() {
        let m = LinearCostModel::with_schedule(2, 3, 1.0, 0.1, WidthSchedule::Fixed(0.25)).unwrap();
        let est = m.predict_lcb(0, &FeatureVec::one_hot(2, 1), 100).unwrap();
        assert!((est.lcb + 0.25).abs() < 1e-15);
        assert!(LinearCostModel::with_schedule(2, 3, 1.0, 0.1, WidthSchedule::Fixed(-1.0)).is_err());
    }
}
