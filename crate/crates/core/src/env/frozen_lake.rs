//! Slippery grid world with hazard cells.
//!
//! The intended move succeeds with probability 0.9 and each orthogonal move
//! happens with probability 0.05. Moves that would leave the grid keep the
//! agent in place. The goal is absorbing. A move whose intended destination
//! is a hazard has mean cost +1, every other move −1. Rewards are 6 at the
//! goal and 0.01 elsewhere, stored divided by 6 so that they lie in `[0, 1]`.

use std::collections::BTreeSet;

use super::{CostNoise, FeatureMap, TableBuilder, TabularCmdp};
use crate::error::{Error, Result};

pub const SLIP_INTENDED: f64 = 0.9;
pub const SLIP_ORTHOGONAL: f64 = 0.05;
pub const GOAL_REWARD: f64 = 6.0;
pub const STEP_REWARD: f64 = 0.01;

/// `(row, column)`, row 0 at the top.
pub type Cell = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    pub fn from_index(i: usize) -> Move {
        Self::ALL[i]
    }

    fn orthogonal(self) -> [Move; 2] {
        match self {
            Move::Up | Move::Down => [Move::Left, Move::Right],
            Move::Left | Move::Right => [Move::Up, Move::Down],
        }
    }
}

/// Grid layout: dimensions, start, goal and hazards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub goal: Cell,
    pub hazards: BTreeSet<Cell>,
}

/// Default 10×10 layout used by the benchmark.
pub const DEFAULT_MAP: &str = "\
S.H.......
...H......
.H..G.H...
..H..H....
....H.....
.H....H...
...H......
......H...
.H..H...H.
..........
";

impl GridMap {
    /// Parses an ASCII grid: `S` start, `G` goal, `H` hazard, `.` free.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            rows.push((i + 1, line));
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "empty map".into(),
            });
        }
        let width = rows[0].1.chars().count();
        let mut start = None;
        let mut goal = None;
        let mut hazards = BTreeSet::new();
        for (r, (line_no, line)) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::Parse {
                    line: *line_no,
                    msg: format!("row width {} differs from {width}", line.chars().count()),
                });
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '.' => {}
                    'H' => {
                        hazards.insert((r, c));
                    }
                    'S' | 'G' => {
                        let slot = if ch == 'S' { &mut start } else { &mut goal };
                        if slot.replace((r, c)).is_some() {
                            return Err(Error::Parse {
                                line: *line_no,
                                msg: format!("duplicate '{ch}'"),
                            });
                        }
                    }
                    other => {
                        return Err(Error::Parse {
                            line: *line_no,
                            msg: format!("unexpected character {other:?}"),
                        })
                    }
                }
            }
        }
        let goal = goal.ok_or(Error::Parse {
            line: 0,
            msg: "map has no goal 'G'".into(),
        })?;
        Ok(Self {
            width,
            height: rows.len(),
            start: start.unwrap_or((0, 0)),
            goal,
            hazards,
        })
    }

    pub fn default_10x10() -> Self {
        Self::parse(DEFAULT_MAP).expect("default map parses")
    }

    pub fn state_of(&self, cell: Cell) -> usize {
        cell.0 * self.width + cell.1
    }

    pub fn cell_of(&self, state: usize) -> Cell {
        (state / self.width, state % self.width)
    }

    /// Destination of a deterministic move; off-grid moves stay put.
    pub fn destination(&self, cell: Cell, mv: Move) -> Cell {
        let (r, c) = cell;
        match mv {
            Move::Up if r > 0 => (r - 1, c),
            Move::Down if r + 1 < self.height => (r + 1, c),
            Move::Left if c > 0 => (r, c - 1),
            Move::Right if c + 1 < self.width => (r, c + 1),
            _ => cell,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.width * self.height < 2 {
            return Err(Error::InvalidEnv(format!(
                "grid {}x{} is too small",
                self.width, self.height
            )));
        }
        let inside = |(r, c): Cell| r < self.height && c < self.width;
        if !inside(self.goal) || !inside(self.start) || !self.hazards.iter().all(|&h| inside(h)) {
            return Err(Error::InvalidEnv("cell outside the grid".into()));
        }
        if self.hazards.contains(&self.goal) {
            return Err(Error::InvalidEnv("goal cell is a hazard".into()));
        }
        Ok(())
    }
}

/// Builds Frozen Lake with the start in the top-left corner.
pub fn build_frozen_lake(
    width: usize,
    height: usize,
    hazard_cells: &BTreeSet<Cell>,
    goal_cell: Cell,
    horizon: usize,
) -> Result<(TabularCmdp, FeatureMap)> {
    let map = GridMap {
        width,
        height,
        start: (0, 0),
        goal: goal_cell,
        hazards: hazard_cells.clone(),
    };
    build_frozen_lake_from_map(&map, horizon)
}

pub fn build_frozen_lake_from_map(map: &GridMap, horizon: usize) -> Result<(TabularCmdp, FeatureMap)> {
    map.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidEnv("horizon must be at least 1".into()));
    }
    let num_states = map.width * map.height;
    let num_actions = Move::ALL.len();
    let goal = map.state_of(map.goal);
    let mut tables = TableBuilder::new(num_states, num_actions, horizon);
    for h in 0..horizon {
        for s in 0..num_states {
            let cell = map.cell_of(s);
            for mv in Move::ALL {
                let a = mv as usize;
                if s == goal {
                    tables.row_mut(h, s, a)[s] = 1.0;
                    // Rewards are stored in units of GOAL_REWARD.
                    tables.set(h, s, a, 1.0, -1.0);
                    continue;
                }
                let intended = map.destination(cell, mv);
                let row = tables.row_mut(h, s, a);
                row[map.state_of(intended)] += SLIP_INTENDED;
                for side in mv.orthogonal() {
                    row[map.state_of(map.destination(cell, side))] += SLIP_ORTHOGONAL;
                }
                let cost = if map.hazards.contains(&intended) { 1.0 } else { -1.0 };
                tables.set(h, s, a, STEP_REWARD / GOAL_REWARD, cost);
            }
        }
    }
    let cmdp = tables
        .finish(CostNoise::None, map.state_of(map.start))?
        .with_reward_scale(GOAL_REWARD);
    Ok((cmdp, FeatureMap::one_hot(num_states, num_actions)))
}
