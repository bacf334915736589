use nalgebra::{DMatrix, DVector};

use super::{check_cost, check_p, CostEstimate, WidthSchedule};
use crate::error::{invalid, Error, Result};
use crate::features::FeatureVec;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// `1 + √(2(γ + 1 + ln(2/p)))`.
pub fn gp_beta(gamma: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(invalid(format!("information gain must be nonnegative, got {gamma}")));
    }
    Ok(1.0 + (2.0 * (gamma + 1.0 + (2.0 / p).ln())).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    /// `φᵀφ'`.
    Linear,
    /// `exp(−‖φ − φ'‖² / (2ℓ²))`.
    SquaredExponential { lengthscale: f64 },
}

impl Kernel {
    pub fn eval(&self, x: &FeatureVec, y: &FeatureVec) -> f64 {
        match *self {
            Kernel::Linear => x.dot(y.values()),
            Kernel::SquaredExponential { lengthscale } => {
                let sq: f64 = x.values().iter().zip(y.values()).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * lengthscale * lengthscale)).exp()
            }
        }
    }

    fn validate(self) -> Result<Self> {
        match self {
            Kernel::SquaredExponential { lengthscale } if !(lengthscale.is_finite() && lengthscale > 0.0) => {
                Err(invalid(format!("lengthscale must be positive, got {lengthscale}")))
            }
            k => Ok(k),
        }
    }
}

/// Observations of one step and the Cholesky factor `L Lᵀ = KER + λI`.
#[derive(Clone, Debug, Default)]
struct StepData {
    points: Vec<FeatureVec>,
    costs: Vec<f64>,
    /// Lower-triangular rows; row `i` has `i + 1` entries.
    chol: Vec<Vec<f64>>,
    /// `ln det(KER + λI) = Σ 2 ln L_ii`.
    log_det: f64,
    /// `(KER + λI)⁻¹ g`.
    alpha: Vec<f64>,
}

impl StepData {
    /// `L⁻¹ v` by forward substitution.
    fn forward(&self, v: &mut [f64]) {
        for i in 0..v.len() {
            let row = &self.chol[i];
            let s: f64 = row[..i].iter().zip(&v[..i]).map(|(l, x)| l * x).sum();
            v[i] = (v[i] - s) / row[i];
        }
    }

    /// `L⁻ᵀ v` by back substitution.
    fn backward(&self, v: &mut [f64]) {
        for i in (0..v.len()).rev() {
            let s: f64 = (i + 1..v.len()).map(|j| self.chol[j][i] * v[j]).sum();
            v[i] = (v[i] - s) / self.chol[i][i];
        }
    }
}

/// Gaussian-process cost estimator with
/// `ĝ = μ(y) − β(γ_h, p/H)·σ(y)` and regularizer `λ = 1 + 2/K`.
#[derive(Clone, Debug)]
pub struct GpCostModel {
    kernel: Kernel,
    lambda: f64,
    p: f64,
    schedule: WidthSchedule,
    steps: Vec<StepData>,
}

impl GpCostModel {
    pub fn new(kernel: Kernel, horizon: usize, episodes: usize, p: f64) -> Result<Self> {
        Self::with_schedule(kernel, horizon, episodes, p, WidthSchedule::Theory)
    }

    pub fn with_schedule(
        kernel: Kernel,
        horizon: usize,
        episodes: usize,
        p: f64,
        schedule: WidthSchedule,
    ) -> Result<Self> {
        check_p(p)?;
        if horizon == 0 || episodes == 0 {
            return Err(invalid("GP cost model needs H >= 1 and K >= 1"));
        }
        Ok(Self {
            kernel: kernel.validate()?,
            lambda: 1.0 + 2.0 / episodes as f64,
            p,
            schedule: schedule.validate()?,
            steps: vec![StepData::default(); horizon],
        })
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn num_observations(&self, h: usize) -> usize {
        self.steps[h].points.len()
    }

    /// Appends `(y, g)` and extends the Cholesky factor by one row.
    pub fn observe(&mut self, h: usize, y: &FeatureVec, cost: f64) -> Result<()> {
        check_cost(cost)?;
        if h >= self.horizon() {
            return Err(invalid(format!("step {h} outside horizon {}", self.horizon())));
        }
        let kernel = self.kernel;
        let lambda = self.lambda;
        let step = &mut self.steps[h];
        let kyy = kernel.eval(y, y);
        if !kyy.is_finite() {
            return Err(Error::NonFinite("kernel value".into()));
        }
        let mut row: Vec<f64> = step.points.iter().map(|x| kernel.eval(x, y)).collect();
        step.forward(&mut row);
        let base = kyy + lambda - row.iter().map(|l| l * l).sum::<f64>();
        let mut pivot = base;
        let mut jitter = JITTER_START;
        while (pivot.is_nan() || pivot <= 0.0) && jitter <= JITTER_MAX {
            pivot = base + jitter;
            jitter *= 10.0;
        }
        if pivot.is_nan() || pivot <= 0.0 {
            return Err(Error::NotPositiveDefinite { pivot: base });
        }
        let diag = pivot.sqrt();
        row.push(diag);
        step.chol.push(row);
        step.log_det += 2.0 * diag.ln();
        step.points.push(y.clone());
        step.costs.push(cost);

        let mut alpha = step.costs.clone();
        step.forward(&mut alpha);
        step.backward(&mut alpha);
        step.alpha = alpha;
        Ok(())
    }

    /// Posterior mean and standard deviation at `y`, and the variance before
    /// clamping at zero.
    pub fn posterior_raw(&self, h: usize, y: &FeatureVec) -> (f64, f64) {
        let step = &self.steps[h];
        let mut k: Vec<f64> = step.points.iter().map(|x| self.kernel.eval(x, y)).collect();
        let mean: f64 = k.iter().zip(&step.alpha).map(|(a, b)| a * b).sum();
        step.forward(&mut k);
        let var = self.kernel.eval(y, y) - k.iter().map(|v| v * v).sum::<f64>();
        (mean, var)
    }

    /// `(μ(y), σ(y))` with the variance clamped at zero.
    pub fn posterior(&self, h: usize, y: &FeatureVec) -> (f64, f64) {
        let (mean, var) = self.posterior_raw(h, y);
        (mean, var.max(0.0).sqrt())
    }

    /// `γ_h = ½ ln det(I + λ⁻¹ KER)` over the observed set.
    pub fn info_gain(&self, h: usize) -> f64 {
        let step = &self.steps[h];
        let n = step.points.len() as f64;
        (0.5 * (step.log_det - n * self.lambda.ln())).max(0.0)
    }

    pub fn multiplier(&self, h: usize) -> Result<f64> {
        match self.schedule {
            WidthSchedule::Theory => gp_beta(self.info_gain(h), self.p / self.horizon() as f64),
            WidthSchedule::Fixed(b) => Ok(b),
        }
    }

    pub fn predict_lcb(&self, h: usize, y: &FeatureVec) -> Result<CostEstimate> {
        let (mean, sigma) = self.posterior(h, y);
        Ok(CostEstimate::new(mean, self.multiplier(h)? * sigma))
    }

    /// Dense `L` for step `h`.
    pub fn cholesky_factor(&self, h: usize) -> DMatrix<f64> {
        let step = &self.steps[h];
        let n = step.points.len();
        DMatrix::from_fn(n, n, |i, j| if j <= i { step.chol[i][j] } else { 0.0 })
    }

    /// Dense `KER` for step `h`.
    pub fn kernel_matrix(&self, h: usize) -> DMatrix<f64> {
        let pts = &self.steps[h].points;
        DMatrix::from_fn(pts.len(), pts.len(), |i, j| self.kernel.eval(&pts[i], &pts[j]))
    }

    pub fn observed_costs(&self, h: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.steps[h].costs)
    }
}
