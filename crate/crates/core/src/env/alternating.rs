//! Single-state CMDP whose attractive action is unsafe.
//!
//! Action 0 pays reward 1 at cost +1, action 1 pays `safe_reward` at cost −1.
//! A controller that tracks the signed cost sum (a virtual queue) settles into
//! alternating between the two, so positive and negative costs cancel in the
//! soft violation while the hard violation keeps growing.

use super::{CostNoise, FeatureMap, TableBuilder, TabularCmdp};
use crate::error::Result;

pub const RISKY: usize = 0;
pub const SAFE: usize = 1;

pub fn build_alternating(horizon: usize, safe_reward: f64) -> Result<(TabularCmdp, FeatureMap)> {
    let mut tables = TableBuilder::new(1, 2, horizon);
    for h in 0..horizon {
        tables.row_mut(h, 0, RISKY)[0] = 1.0;
        tables.row_mut(h, 0, SAFE)[0] = 1.0;
        tables.set(h, 0, RISKY, 1.0, 1.0);
        tables.set(h, 0, SAFE, safe_reward, -1.0);
    }
    let cmdp = tables.finish(CostNoise::None, 0)?;
    Ok((cmdp, FeatureMap::one_hot(1, 2)))
}
