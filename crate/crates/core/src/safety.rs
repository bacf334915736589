//! Penalty factors `Z_h` and the penalized action rule.
//!
//! Rectified mode keeps `Z_h ≥ k` after episode `k` and never decreases.
//! Virtual-queue mode is the primal-dual baseline whose queue can drain when
//! positive and negative costs cancel. Off mode is plain LSVI.

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PenaltyMode {
    /// `Z ← max{Z + (g)₊, k}`, `Z¹ = 1`.
    Rectified,
    /// `Z ← max{Z + g, 0}`, `Z¹ = 0`.
    VirtualQueue,
    /// `Z ≡ 0`.
    Off,
}

impl PenaltyMode {
    pub fn name(self) -> &'static str {
        match self {
            PenaltyMode::Rectified => "rectified",
            PenaltyMode::VirtualQueue => "virtual_queue",
            PenaltyMode::Off => "off",
        }
    }
}

/// One penalty factor per step.
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyLedger {
    mode: PenaltyMode,
    z: Vec<f64>,
}

fn check_cost(g: f64) -> Result<()> {
    if !(g.is_finite() && g.abs() <= 1.0) {
        return Err(Error::CostRange(g));
    }
    Ok(())
}

impl PenaltyLedger {
    pub fn new(mode: PenaltyMode, horizon: usize) -> Self {
        let init = match mode {
            PenaltyMode::Rectified => 1.0,
            PenaltyMode::VirtualQueue | PenaltyMode::Off => 0.0,
        };
        Self {
            mode,
            z: vec![init; horizon],
        }
    }

    /// Ledger with explicit starting values, mainly for tests.
    pub fn with_values(mode: PenaltyMode, z: Vec<f64>) -> Result<Self> {
        if z.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("penalty factors must be finite and nonnegative"));
        }
        if mode == PenaltyMode::Off && z.iter().any(|v| *v != 0.0) {
            return Err(invalid("off mode requires Z = 0"));
        }
        Ok(Self { mode, z })
    }

    pub fn mode(&self) -> PenaltyMode {
        self.mode
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    fn expect_mode(&self, expected: PenaltyMode) -> Result<()> {
        if self.mode != expected {
            return Err(Error::WrongMode {
                expected: expected.name(),
                actual: self.mode.name(),
            });
        }
        Ok(())
    }

    /// `Z_h ← max{Z_h + max(g, 0), k}`.
    pub fn penalty_update(&mut self, h: usize, g: f64, k: usize) -> Result<()> {
        self.expect_mode(PenaltyMode::Rectified)?;
        check_cost(g)?;
        if k == 0 {
            return Err(invalid("episode index is 1-based"));
        }
        let z = &mut self.z[h];
        *z = (*z + g.max(0.0)).max(k as f64);
        Ok(())
    }

    /// `Z_h ← max{Z_h + g, 0}`.
    pub fn virtual_queue_update(&mut self, h: usize, g: f64) -> Result<()> {
        self.expect_mode(PenaltyMode::VirtualQueue)?;
        check_cost(g)?;
        let z = &mut self.z[h];
        *z = (*z + g).max(0.0);
        Ok(())
    }

    /// Applies the mode's update to every step with the costs observed in
    /// episode `k`.
    pub fn end_episode(&mut self, costs: &[f64], k: usize) -> Result<()> {
        if costs.len() != self.z.len() {
            return Err(invalid(format!(
                "{} costs for a horizon of {}",
                costs.len(),
                self.z.len()
            )));
        }
        for (h, &g) in costs.iter().enumerate() {
            match self.mode {
                PenaltyMode::Rectified => self.penalty_update(h, g, k)?,
                PenaltyMode::VirtualQueue => self.virtual_queue_update(h, g)?,
                PenaltyMode::Off => check_cost(g)?,
            }
        }
        Ok(())
    }
}

/// `argmax_a Q(a) − Z·max(ĝ(a), 0)`, lowest index on ties. Returns the action
/// and its objective value.
pub fn penalized_argmax(q_row: &[f64], g_hat_row: &[f64], z: f64) -> Result<(usize, f64)> {
    if q_row.is_empty() {
        return Err(invalid("empty action set"));
    }
    if q_row.len() != g_hat_row.len() {
        return Err(invalid("Q and cost rows differ in length"));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (a, (&q, &g)) in q_row.iter().zip(g_hat_row).enumerate() {
        let penalty = if g > 0.0 { z * g } else { 0.0 };
        let obj = q - penalty;
        if obj.is_nan() {
            return Err(Error::NonFinite(format!("penalized objective of action {a}")));
        }
        if obj > best.1 {
            best = (a, obj);
        }
    }
    Ok(best)
}
