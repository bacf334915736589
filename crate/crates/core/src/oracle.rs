//! Exact solvers on known tabular CMDPs.

use crate::env::TabularCmdp;
use crate::error::{Error, Result};

/// Largest number of deterministic policies `brute_force_enumerate` visits.
pub const ENUMERATION_CAP: f64 = 1e6;

/// Deterministic Markov policy `π[h][s]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy {
    actions: Vec<Vec<usize>>,
}

impl Policy {
    pub fn new(actions: Vec<Vec<usize>>) -> Self {
        Self { actions }
    }

    pub fn constant(horizon: usize, num_states: usize, action: usize) -> Self {
        Self::new(vec![vec![action; num_states]; horizon])
    }

    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h][s]
    }

    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.actions
    }

    fn check(&self, cmdp: &TabularCmdp) -> Result<()> {
        let shape_ok = self.actions.len() == cmdp.horizon()
            && self
                .actions
                .iter()
                .all(|row| row.len() == cmdp.num_states() && row.iter().all(|a| *a < cmdp.num_actions()));
        if !shape_ok {
            return Err(Error::OutOfRange("policy does not match the CMDP".into()));
        }
        Ok(())
    }
}

/// `V[h][s]` for `h ∈ 0..=H` (row `H` is zero) and `Q[h][s·A + a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    pub v: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

impl ValueTable {
    /// Value at the first step from the initial state.
    pub fn initial_value(&self, cmdp: &TabularCmdp) -> f64 {
        self.v[0][cmdp.initial_state()]
    }

    /// `max |Q − (r + P·V_{h+1})|`.
    pub fn bellman_residual(&self, cmdp: &TabularCmdp) -> f64 {
        let mut worst: f64 = 0.0;
        for h in 0..cmdp.horizon() {
            for s in 0..cmdp.num_states() {
                for a in 0..cmdp.num_actions() {
                    let target = backup(cmdp, &self.v[h + 1], h, s, a);
                    worst = worst.max((self.q[h][s * cmdp.num_actions() + a] - target).abs());
                }
            }
        }
        worst
    }
}

fn backup(cmdp: &TabularCmdp, next: &[f64], h: usize, s: usize, a: usize) -> f64 {
    let expected: f64 = cmdp.transition_row(h, s, a).iter().zip(next).map(|(p, v)| p * v).sum();
    cmdp.reward(h, s, a) + expected
}

fn q_table(cmdp: &TabularCmdp, next: &[f64], h: usize) -> Vec<f64> {
    let n_a = cmdp.num_actions();
    (0..cmdp.num_states() * n_a)
        .map(|i| backup(cmdp, next, h, i / n_a, i % n_a))
        .collect()
}

/// Backward induction with the maximization at each `(h, s)` restricted to
/// `{a : g_h(s, a) ≤ 0}` when `safe_only`. Ties go to the lowest action.
fn dynamic_programming(cmdp: &TabularCmdp, safe_only: bool) -> Result<(Policy, ValueTable)> {
    let (horizon, n_s, n_a) = (cmdp.horizon(), cmdp.num_states(), cmdp.num_actions());
    let mut v = vec![vec![0.0; n_s]; horizon + 1];
    let mut q = vec![Vec::new(); horizon];
    let mut actions = vec![vec![0; n_s]; horizon];
    for h in (0..horizon).rev() {
        let q_h = q_table(cmdp, &v[h + 1], h);
        for s in 0..n_s {
            let mut best: Option<(usize, f64)> = None;
            for a in 0..n_a {
                if safe_only && cmdp.cost_mean(h, s, a) > 0.0 {
                    continue;
                }
                let value = q_h[s * n_a + a];
                if best.is_none_or(|(_, b)| value > b) {
                    best = Some((a, value));
                }
            }
            let (a, value) = best.ok_or(Error::Infeasible { h, state: s })?;
            actions[h][s] = a;
            v[h][s] = value;
        }
        q[h] = q_h;
    }
    Ok((Policy::new(actions), ValueTable { v, q }))
}

/// Optimal policy among those that only take actions with nonpositive mean
/// cost, at every step and state.
pub fn constrained_dp(cmdp: &TabularCmdp) -> Result<(Policy, ValueTable)> {
    dynamic_programming(cmdp, true)
}

pub fn unconstrained_dp(cmdp: &TabularCmdp) -> Result<(Policy, ValueTable)> {
    dynamic_programming(cmdp, false)
}

/// Exact values of `policy` by backward induction.
pub fn policy_eval(cmdp: &TabularCmdp, policy: &Policy) -> Result<ValueTable> {
    policy.check(cmdp)?;
    let (horizon, n_s, n_a) = (cmdp.horizon(), cmdp.num_states(), cmdp.num_actions());
    let mut v = vec![vec![0.0; n_s]; horizon + 1];
    let mut q = vec![Vec::new(); horizon];
    for h in (0..horizon).rev() {
        let q_h = q_table(cmdp, &v[h + 1], h);
        for s in 0..n_s {
            v[h][s] = q_h[s * n_a + policy.action(h, s)];
        }
        q[h] = q_h;
    }
    Ok(ValueTable { v, q })
}

/// `V₁^π(x₁)` only, without storing Q.
fn initial_value_of(cmdp: &TabularCmdp, actions: &[Vec<usize>], scratch: &mut [Vec<f64>]) -> f64 {
    let (horizon, n_s) = (cmdp.horizon(), cmdp.num_states());
    scratch[horizon].iter_mut().for_each(|x| *x = 0.0);
    for h in (0..horizon).rev() {
        let (head, tail) = scratch.split_at_mut(h + 1);
        let next = &tail[0];
        for s in 0..n_s {
            head[h][s] = backup(cmdp, next, h, s, actions[h][s]);
        }
    }
    scratch[0][cmdp.initial_state()]
}

/// Evaluates every deterministic policy (only safe ones if `safe_only`) and
/// returns the one with the largest `V₁(x₁)`, first found on ties.
pub fn brute_force_enumerate(cmdp: &TabularCmdp, safe_only: bool) -> Result<(Policy, f64)> {
    let (horizon, n_s, n_a) = (cmdp.horizon(), cmdp.num_states(), cmdp.num_actions());
    let count = (n_a as f64).powi((n_s * horizon) as i32);
    if count > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            count,
            cap: ENUMERATION_CAP,
        });
    }
    let choices: Vec<Vec<usize>> = (0..horizon * n_s)
        .map(|i| {
            let (h, s) = (i / n_s, i % n_s);
            let allowed: Vec<usize> = if safe_only {
                cmdp.safe_actions(h, s).collect()
            } else {
                (0..n_a).collect()
            };
            if allowed.is_empty() {
                Err(Error::Infeasible { h, state: s })
            } else {
                Ok(allowed)
            }
        })
        .collect::<Result<_>>()?;

    let mut digits = vec![0usize; choices.len()];
    let mut actions = vec![vec![0; n_s]; horizon];
    let mut scratch = vec![vec![0.0; n_s]; horizon + 1];
    let mut best: Option<(Vec<Vec<usize>>, f64)> = None;
    loop {
        for (i, &d) in digits.iter().enumerate() {
            actions[i / n_s][i % n_s] = choices[i][d];
        }
        let value = initial_value_of(cmdp, &actions, &mut scratch);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((actions.clone(), value));
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == digits.len() {
                let (table, value) = best.expect("at least one policy");
                return Ok((Policy::new(table), value));
            }
            digits[i] += 1;
            if digits[i] < choices[i].len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
