use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::ExperimentConfig;
use super::metrics::{fit_growth_exponent, Metrics};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "episode,reward,hard_violation,cum_regret,cum_violation";

/// Results table, one row per episode, 16 significant digits.
pub fn write_csv(metrics: &Metrics) -> String {
    let mut out = String::with_capacity(80 * (metrics.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let cum_regret = metrics.cum_regret();
    let cum_violation = metrics.cum_violation();
    for (i, e) in metrics.episodes.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{:.15e},{:.15e},{:.15e},{:.15e}",
            i + 1,
            e.reward,
            e.hard_violation,
            cum_regret[i],
            cum_violation[i]
        );
    }
    out
}

fn summary(metrics: &Metrics) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "episodes = {}", metrics.len());
    let _ = writeln!(s, "v_star = {:.15e}", metrics.v_star);
    let _ = writeln!(s, "total_regret = {:.15e}", metrics.total_regret());
    let _ = writeln!(s, "total_violation = {:.15e}", metrics.total_violation());
    let _ = writeln!(s, "total_soft_cost = {:.15e}", metrics.total_soft_cost());
    let _ = writeln!(s, "mean_reward_last_100 = {:.15e}", metrics.tail_mean_reward(100));
    if let Ok(e) = fit_growth_exponent(&metrics.cum_violation()) {
        let _ = writeln!(s, "violation_exponent = {e:.6}");
    }
    if let Ok(e) = fit_growth_exponent(&metrics.cum_regret()) {
        let _ = writeln!(s, "regret_exponent = {e:.6}");
    }
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `results.csv`, `config.txt` (including the seed) and `summary.txt`
/// into `dir`, creating it if needed.
pub fn emit_results(metrics: &Metrics, config: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write(&dir.join("results.csv"), &write_csv(metrics))?;
    write(&dir.join("config.txt"), &config.to_kv())?;
    write(&dir.join("summary.txt"), &summary(metrics))
}
