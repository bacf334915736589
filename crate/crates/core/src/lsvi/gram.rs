use nalgebra::{DMatrix, DVector};

use crate::env::FEATURE_NORM_TOL;
use crate::error::{invalid, Error, Result};
use crate::features::FeatureVec;

/// Smallest admissible Sherman–Morrison denominator `1 + φᵀA⁻¹φ`.
const BREAKDOWN_TOL: f64 = 1e-12;

/// Regularized Gram matrix `Λ = λI + Σ φφᵀ`, its inverse, and the target
/// accumulator `b = Σ φ·y`.
///
/// The inverse is maintained with the rank-1 identity
/// `(A + φφᵀ)⁻¹ = A⁻¹ − A⁻¹φφᵀA⁻¹ / (1 + φᵀA⁻¹φ)`, touching only the
/// nonzero entries of `φ` and of `A⁻¹φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramState {
    lambda: f64,
    gram: DMatrix<f64>,
    inverse: DMatrix<f64>,
    target: DVector<f64>,
    count: usize,
}

impl GramState {
    /// `Λ = λI`, `Λ⁻¹ = I/λ`, `b = 0`.
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("Gram dimension must be positive"));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid(format!("ridge parameter must be positive, got {lambda}")));
        }
        Ok(Self {
            lambda,
            gram: DMatrix::identity(dim, dim) * lambda,
            inverse: DMatrix::identity(dim, dim) / lambda,
            target: DVector::zeros(dim),
            count: 0,
        })
    }

    /// Rebuilds the state from scratch with a dense inverse. Debug
    /// cross-check for the incremental path.
    pub fn from_samples<'a, I>(dim: usize, lambda: f64, samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a FeatureVec, f64)>,
    {
        let mut state = Self::new(dim, lambda)?;
        for (phi, y) in samples {
            check_norm(phi)?;
            for (i, vi) in phi.nonzeros() {
                for (j, vj) in phi.nonzeros() {
                    state.gram[(i, j)] += vi * vj;
                }
                state.target[i] += vi * y;
            }
            state.count += 1;
        }
        state.inverse = state
            .gram
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("Gram matrix is singular".into()))?;
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    /// Number of ingested samples.
    pub fn count(&self) -> usize {
        self.count
    }

    /// `Λ += φφᵀ`, `b += φ·target`, inverse by the rank-1 identity.
    pub fn update(&mut self, phi: &FeatureVec, target: f64) -> Result<()> {
        self.add_feature(phi)?;
        for (i, v) in phi.nonzeros() {
            self.target[i] += v * target;
        }
        Ok(())
    }

    /// Updates `Λ` and its inverse only, leaving `b` untouched.
    pub fn add_feature(&mut self, phi: &FeatureVec) -> Result<()> {
        check_norm(phi)?;
        if phi.dim() != self.dim() {
            return Err(invalid(format!(
                "feature of dim {} for a {}-dim Gram",
                phi.dim(),
                self.dim()
            )));
        }
        self.count += 1;
        if phi.support().is_empty() {
            return Ok(());
        }
        let u = self.inverse_times(phi);
        let denom = 1.0 + phi.dot(u.as_slice());
        if denom.is_nan() || denom <= BREAKDOWN_TOL {
            return Err(Error::Numerical(format!(
                "Sherman-Morrison denominator {denom:e}; Gram inverse is corrupted"
            )));
        }
        let support: Vec<(usize, f64)> = u
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(i, x)| (i, *x))
            .collect();
        for &(j, uj) in &support {
            let scaled = uj / denom;
            for &(i, ui) in &support {
                self.inverse[(i, j)] -= ui * scaled;
            }
        }
        for (i, vi) in phi.nonzeros() {
            for (j, vj) in phi.nonzeros() {
                self.gram[(i, j)] += vi * vj;
            }
        }
        Ok(())
    }

    /// `Λ⁻¹ φ` using only the support of `φ`.
    pub fn inverse_times(&self, phi: &FeatureVec) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (j, v) in phi.nonzeros() {
            out.axpy(v, &self.inverse.column(j), 1.0);
        }
        out
    }

    /// `Λ⁻¹ b` for a dense right-hand side, skipping zero entries of `b`.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (j, &v) in rhs.iter().enumerate() {
            if v != 0.0 {
                out.axpy(v, &self.inverse.column(j), 1.0);
            }
        }
        out
    }

    /// Ridge weights `w = Λ⁻¹ b`.
    pub fn ridge_weights(&self) -> DVector<f64> {
        self.solve(&self.target)
    }

    /// `φᵀΛ⁻¹φ`, clamped at zero to absorb roundoff.
    pub fn quad_form(&self, phi: &FeatureVec) -> f64 {
        let mut acc = 0.0;
        for (i, vi) in phi.nonzeros() {
            for (j, vj) in phi.nonzeros() {
                acc += vi * vj * self.inverse[(i, j)];
            }
        }
        acc.max(0.0)
    }

    /// `‖φ‖_{Λ⁻¹}`.
    pub fn bonus_norm(&self, phi: &FeatureVec) -> f64 {
        self.quad_form(phi).sqrt()
    }

    /// `max |Λ⁻¹Λ − I|`.
    pub fn inverse_residual(&self) -> f64 {
        let prod = &self.inverse * &self.gram;
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - expected).abs());
            }
        }
        worst
    }

    /// Spectral condition number of `Λ`.
    pub fn condition_number(&self) -> f64 {
        let eig = self.gram.clone().symmetric_eigenvalues();
        let max = eig.max();
        let min = eig.min();
        max / min
    }
}

fn check_norm(phi: &FeatureVec) -> Result<()> {
    let norm = phi.norm();
    if !norm.is_finite() || norm > 1.0 + FEATURE_NORM_TOL {
        return Err(Error::FeatureNorm { norm });
    }
    Ok(())
}
