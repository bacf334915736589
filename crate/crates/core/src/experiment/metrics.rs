use crate::error::{invalid, Result};

/// Per-episode quantities of one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeMetrics {
    /// Realized return in the environment's original reward units.
    pub reward: f64,
    /// `Σ_h max(g_h(x_h, a_h), 0)` with ground-truth mean costs.
    pub hard_violation: f64,
    /// `Σ_h g_h(x_h, a_h)`, which may cancel across steps.
    pub soft_cost: f64,
    /// `V*₁(x₁) − V^{π_k}₁(x₁)`, signed.
    pub regret: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub episodes: Vec<EpisodeMetrics>,
    /// `Z` after each episode's update.
    pub z_history: Vec<Vec<f64>>,
    /// Optimal safe value from the initial state, original reward units.
    pub v_star: f64,
}

fn running_sum(values: impl Iterator<Item = f64>) -> Vec<f64> {
    values
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

impl Metrics {
    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn push(&mut self, episode: EpisodeMetrics, z: Vec<f64>) {
        self.episodes.push(episode);
        self.z_history.push(z);
    }

    pub fn cum_regret(&self) -> Vec<f64> {
        running_sum(self.episodes.iter().map(|e| e.regret))
    }

    pub fn cum_violation(&self) -> Vec<f64> {
        running_sum(self.episodes.iter().map(|e| e.hard_violation))
    }

    pub fn cum_soft_cost(&self) -> Vec<f64> {
        running_sum(self.episodes.iter().map(|e| e.soft_cost))
    }

    pub fn total_regret(&self) -> f64 {
        self.episodes.iter().map(|e| e.regret).sum()
    }

    pub fn total_violation(&self) -> f64 {
        self.episodes.iter().map(|e| e.hard_violation).sum()
    }

    pub fn total_soft_cost(&self) -> f64 {
        self.episodes.iter().map(|e| e.soft_cost).sum()
    }

    /// Mean reward over the last `n` episodes.
    pub fn tail_mean_reward(&self, n: usize) -> f64 {
        let n = n.min(self.len()).max(1);
        self.episodes[self.len().saturating_sub(n)..]
            .iter()
            .map(|e| e.reward)
            .sum::<f64>()
            / n as f64
    }

    pub fn violation_exponent(&self) -> Result<f64> {
        fit_growth_exponent(&self.cum_violation())
    }

    pub fn regret_exponent(&self) -> Result<f64> {
        fit_growth_exponent(&self.cum_regret())
    }
}

/// Least-squares slope of `ln S_k` against `ln k` (k 1-based) over the
/// second half of a cumulative series.
///
/// Needs at least 100 points. Nonpositive entries carry no log-scale
/// information and are skipped; a series with no positive entry in its
/// second half is degenerate and returns 0.
pub fn fit_growth_exponent(series: &[f64]) -> Result<f64> {
    if series.len() < 100 {
        return Err(invalid(format!(
            "growth exponent needs at least 100 points, got {}",
            series.len()
        )));
    }
    let start = series.len() / 2;
    let points: Vec<(f64, f64)> = series[start..]
        .iter()
        .enumerate()
        .filter(|(_, y)| **y > 0.0)
        .map(|(i, y)| (((start + i + 1) as f64).ln(), y.ln()))
        .collect();
    if points.len() < 2 {
        return Ok(0.0);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
