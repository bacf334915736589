//! Plain-text tabular environment format.
//!
//! ```text
//! # comment
//! dims <states> <actions> <feature_dim>
//! horizon <H>
//! initial <state>
//! reward_scale <x>
//! noise none | noise gaussian <scale>
//! row <h> <s> <a> <reward> <cost> <p_0> … <p_{S-1}>
//! phi <s> <a> <v_0> … <v_{d-1}>
//! ```
//!
//! Every `(h, s, a)` needs exactly one `row` line and every `(s, a)` one `phi`
//! line. Numbers are written in shortest round-trip form, so write → read is
//! lossless.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{CostNoise, FeatureMap, TableBuilder, TabularCmdp};
use crate::error::{Error, Result};
use crate::features::FeatureVec;

pub fn write_env(cmdp: &TabularCmdp, features: &FeatureMap) -> String {
    let (n_s, n_a, horizon) = (cmdp.num_states(), cmdp.num_actions(), cmdp.horizon());
    let mut out = String::new();
    let _ = writeln!(out, "dims {n_s} {n_a} {}", features.dim());
    let _ = writeln!(out, "horizon {horizon}");
    let _ = writeln!(out, "initial {}", cmdp.initial_state());
    let _ = writeln!(out, "reward_scale {}", cmdp.reward_scale());
    match cmdp.cost_noise() {
        CostNoise::None => out.push_str("noise none\n"),
        CostNoise::Gaussian { scale } => {
            let _ = writeln!(out, "noise gaussian {scale}");
        }
    }
    for h in 0..horizon {
        for s in 0..n_s {
            for a in 0..n_a {
                let _ = write!(
                    out,
                    "row {h} {s} {a} {} {}",
                    cmdp.reward(h, s, a),
                    cmdp.cost_mean(h, s, a)
                );
                for p in cmdp.transition_row(h, s, a) {
                    let _ = write!(out, " {p}");
                }
                out.push('\n');
            }
        }
    }
    for s in 0..n_s {
        for a in 0..n_a {
            let _ = write!(out, "phi {s} {a}");
            for v in features.get(s, a).values() {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
    }
    out
}

struct Cursor<'a> {
    line: usize,
    tokens: std::str::SplitWhitespace<'a>,
}

impl<'a> Cursor<'a> {
    fn next<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.tokens.next().ok_or_else(|| Error::Parse {
            line: self.line,
            msg: format!("missing {what}"),
        })?;
        tok.parse().map_err(|_| Error::Parse {
            line: self.line,
            msg: format!("bad {what}: {tok:?}"),
        })
    }

    fn finish(mut self) -> Result<()> {
        match self.tokens.next() {
            None => Ok(()),
            Some(tok) => Err(Error::Parse {
                line: self.line,
                msg: format!("trailing token {tok:?}"),
            }),
        }
    }
}

pub fn read_env(text: &str) -> Result<(TabularCmdp, FeatureMap)> {
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut horizon: Option<usize> = None;
    let mut initial = 0usize;
    let mut reward_scale = 1.0f64;
    let mut noise = CostNoise::None;
    let mut tables: Option<TableBuilder> = None;
    let mut seen_rows: Vec<bool> = Vec::new();
    let mut phis: Vec<Option<FeatureVec>> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap_or_default();
        let mut cur = Cursor { line: line_no, tokens };
        let parse_err = |msg: String| Error::Parse { line: line_no, msg };
        match key {
            "dims" => {
                dims = Some((cur.next("states")?, cur.next("actions")?, cur.next("feature_dim")?));
                cur.finish()?;
            }
            "horizon" => {
                horizon = Some(cur.next("horizon")?);
                cur.finish()?;
            }
            "initial" => {
                initial = cur.next("initial state")?;
                cur.finish()?;
            }
            "reward_scale" => {
                reward_scale = cur.next("reward scale")?;
                cur.finish()?;
            }
            "noise" => {
                let kind: String = cur.next("noise kind")?;
                noise = match kind.as_str() {
                    "none" => CostNoise::None,
                    "gaussian" => CostNoise::Gaussian {
                        scale: cur.next("noise scale")?,
                    },
                    other => return Err(parse_err(format!("unknown noise {other:?}"))),
                };
                cur.finish()?;
            }
            "row" | "phi" => {
                let (n_s, n_a, d) = dims.ok_or_else(|| parse_err("'dims' must come first".into()))?;
                let horizon = horizon.ok_or_else(|| parse_err("'horizon' must come first".into()))?;
                if tables.is_none() {
                    tables = Some(TableBuilder::new(n_s, n_a, horizon));
                    seen_rows = vec![false; horizon * n_s * n_a];
                    phis = vec![None; n_s * n_a];
                }
                let t = tables.as_mut().expect("initialized above");
                if key == "row" {
                    let (h, s, a): (usize, usize, usize) = (cur.next("h")?, cur.next("s")?, cur.next("a")?);
                    if h >= horizon || s >= n_s || a >= n_a {
                        return Err(parse_err(format!("row ({h}, {s}, {a}) out of range")));
                    }
                    let idx = t.index(h, s, a);
                    if std::mem::replace(&mut seen_rows[idx], true) {
                        return Err(parse_err(format!("duplicate row ({h}, {s}, {a})")));
                    }
                    let reward = cur.next("reward")?;
                    let cost = cur.next("cost")?;
                    t.set(h, s, a, reward, cost);
                    let mut probs = Vec::with_capacity(n_s);
                    for _ in 0..n_s {
                        probs.push(cur.next::<f64>("probability")?);
                    }
                    t.row_mut(h, s, a).copy_from_slice(&probs);
                } else {
                    let (s, a): (usize, usize) = (cur.next("s")?, cur.next("a")?);
                    if s >= n_s || a >= n_a {
                        return Err(parse_err(format!("phi ({s}, {a}) out of range")));
                    }
                    let mut v = Vec::with_capacity(d);
                    for _ in 0..d {
                        v.push(cur.next::<f64>("feature value")?);
                    }
                    if phis[s * n_a + a].replace(FeatureVec::new(v)).is_some() {
                        return Err(parse_err(format!("duplicate phi ({s}, {a})")));
                    }
                }
                cur.finish()?;
            }
            other => return Err(parse_err(format!("unknown key {other:?}"))),
        }
    }

    let (_, n_a, d) = dims.ok_or(Error::Parse {
        line: 0,
        msg: "missing 'dims'".into(),
    })?;
    let tables = tables.ok_or(Error::Parse {
        line: 0,
        msg: "no rows".into(),
    })?;
    if let Some(missing) = seen_rows.iter().position(|seen| !seen) {
        return Err(Error::Parse {
            line: 0,
            msg: format!("missing row for flat index {missing}"),
        });
    }
    let table = phis
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            f.ok_or(Error::Parse {
                line: 0,
                msg: format!("missing phi for pair {i}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cmdp = tables.finish(noise, initial)?.with_reward_scale(reward_scale);
    let features = FeatureMap::new(d, n_a, table)?;
    Ok((cmdp, features))
}
