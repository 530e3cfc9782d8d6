//! Discounted solvers and optimality-equation residuals.
//!
//! Value iteration stops via the standard geometric tail bound: when the
//! sup-norm step times `beta/(1-beta)` is under the tolerance, the iterate
//! is within tolerance of the fixed point. Policy iteration evaluates each
//! policy exactly through the linear solver and terminates when the greedy
//! policy repeats. Ties in every min/argmin go to the lowest action index.
//!
//! The residual functions measure, in the sup-norm, how far a candidate
//! solution is from the discounted, total-cost, and average-cost optimality
//! equations; they are the crate's acceptance instruments.

use std::collections::HashSet;

use thiserror::Error;

use crate::mdp::{weighted_row_sum, FiniteMdp, StationaryPolicy, ValueVector};
use crate::transform::DiscountedProblem;

const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("discount factor {0} must lie in [0, 1)")]
    BadBeta(f64),
    #[error("tolerance must be positive and finite")]
    BadTolerance,
    #[error("beta * sup row mass = {0} is not below 1; the Bellman operator does not contract")]
    NotContractive(f64),
    #[error("policy evaluation system is singular: {0}")]
    SingularEvaluation(String),
    #[error("state {0} has no actions")]
    NoActions(usize),
    #[error("average-cost residual requires a row-stochastic kernel")]
    NotStochastic,
}

/// Solution of a discounted problem plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub value: ValueVector,
    pub greedy_policy: StationaryPolicy,
    /// Sup-norm Bellman residual of the reported value.
    pub residual_sup: f64,
    pub iterations: usize,
    pub beta: f64,
    pub converged: bool,
}

fn bellman_min(m: &FiniteMdp, beta: f64, v: &[f64], x: usize) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut best_action = 0;
    for a in 0..m.n_actions(x) {
        let q = m.cost(x, a) + beta * weighted_row_sum(m.kernel_row(x, a), v, None);
        if q < best {
            best = q;
            best_action = a;
        }
    }
    (best, best_action)
}

fn bellman_sweep(m: &FiniteMdp, beta: f64, v: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = m.n_states();
    let mut next = vec![0.0_f64; n];
    let mut greedy = vec![0usize; n];
    for x in 0..n {
        let (val, act) = bellman_min(m, beta, v, x);
        next[x] = val;
        greedy[x] = act;
    }
    (next, greedy)
}

fn check_solvable(m: &FiniteMdp, beta: f64, tol: f64) -> Result<(), SolveError> {
    if !(0.0..1.0).contains(&beta) {
        return Err(SolveError::BadBeta(beta));
    }
    if tol <= 0.0 || !tol.is_finite() {
        return Err(SolveError::BadTolerance);
    }
    for x in 0..m.n_states() {
        if m.n_actions(x) == 0 {
            return Err(SolveError::NoActions(x));
        }
    }
    let reach = beta * m.sup_row_mass();
    if reach >= 1.0 {
        return Err(SolveError::NotContractive(reach));
    }
    Ok(())
}

/// Value iteration on an arbitrary model with discount `beta`, requiring
/// `beta * sup row mass < 1`. This is the engine behind
/// [`value_iteration`]; it also serves models whose rows are genuinely
/// sub-stochastic.
pub fn solve_discounted(
    m: &FiniteMdp,
    beta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport, SolveError> {
    check_solvable(m, beta, tol)?;
    let n = m.n_states();
    let contraction = beta * m.sup_row_mass();
    // With modulus r, step d implies distance to the fixed point <= d*r/(1-r).
    let step_tol = if contraction > 0.0 {
        tol * (1.0 - contraction) / contraction
    } else {
        f64::INFINITY
    };
    let mut v = vec![0.0_f64; n];
    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let (next, _) = bellman_sweep(m, beta, &v);
        let step = next
            .iter()
            .zip(v.iter())
            .fold(0.0_f64, |acc, (b, a)| acc.max((b - a).abs()));
        v = next;
        if step <= step_tol || step == 0.0 {
            converged = true;
            break;
        }
    }
    let (applied, greedy) = bellman_sweep(m, beta, &v);
    let residual_sup = applied
        .iter()
        .zip(v.iter())
        .fold(0.0_f64, |acc, (b, a)| acc.max((b - a).abs()));
    Ok(SolveReport {
        value: ValueVector::from(v),
        greedy_policy: StationaryPolicy::from_raw(greedy),
        residual_sup,
        iterations,
        beta,
        converged,
    })
}

/// Value iteration on a discounted problem produced by one of the rewrites.
/// The value at the added absorbing state is exactly zero.
pub fn value_iteration(
    dp: &DiscountedProblem,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport, SolveError> {
    let report = solve_discounted(&dp.mdp, dp.beta, tol, max_iter)?;
    debug_assert!(report.value[dp.absorbing_state].abs() <= tol);
    Ok(report)
}

/// Policy iteration with exact evaluation. Terminates when the greedy policy
/// repeats; guarded against float-induced cycling by a visited set and a
/// round cap.
pub fn policy_iteration(dp: &DiscountedProblem, tol: f64) -> Result<SolveReport, SolveError> {
    policy_iteration_discounted(&dp.mdp, dp.beta, tol)
}

/// Policy iteration engine on an arbitrary model with discount `beta`.
pub fn policy_iteration_discounted(
    m: &FiniteMdp,
    beta: f64,
    tol: f64,
) -> Result<SolveReport, SolveError> {
    check_solvable(m, beta, tol)?;
    let n = m.n_states();
    let max_rounds = 2 + n * (0..n).map(|x| m.n_actions(x)).max().unwrap_or(1);
    // Start from the myopic policy.
    let (_, mut policy) = bellman_sweep(m, beta, &vec![0.0; n]);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut rounds = 0usize;
    let value = loop {
        rounds += 1;
        let scaled: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|x| {
                m.kernel_row(x, policy[x])
                    .iter()
                    .map(|&(t, mass)| (t, beta * mass))
                    .collect()
            })
            .collect();
        let rows: Vec<&[(usize, f64)]> = scaled.iter().map(|r| r.as_slice()).collect();
        let costs: Vec<f64> = (0..n).map(|x| m.cost(x, policy[x])).collect();
        let v = crate::linalg::solve_i_minus(&rows, &costs)
            .map_err(|e| SolveError::SingularEvaluation(e.to_string()))?;
        let (_, improved) = bellman_sweep(m, beta, &v);
        if improved == policy || rounds >= max_rounds || !seen.insert(improved.clone()) {
            break v;
        }
        policy = improved;
    };
    let (applied, greedy) = bellman_sweep(m, beta, &value);
    let residual_sup = applied
        .iter()
        .zip(value.iter())
        .fold(0.0_f64, |acc, (b, a)| acc.max((b - a).abs()));
    Ok(SolveReport {
        value: ValueVector::from(value),
        greedy_policy: StationaryPolicy::from_raw(greedy),
        residual_sup,
        iterations: rounds,
        beta,
        converged: residual_sup <= tol,
    })
}

/// Residuals of a candidate value against the discounted optimality
/// equation: `(min-form defect, policy-form defect)`. A policy is optimal
/// for the discounted problem exactly when both vanish.
pub fn dcoe_residual(
    dp: &DiscountedProblem,
    v: &ValueVector,
    policy: &StationaryPolicy,
) -> (f64, f64) {
    let m = &dp.mdp;
    assert_eq!(v.len(), m.n_states(), "value length mismatch");
    let mut min_form = 0.0_f64;
    let mut policy_form = 0.0_f64;
    for x in 0..m.n_states() {
        let (best, _) = bellman_min(m, dp.beta, v, x);
        min_form = min_form.max((v[x] - best).abs());
        let a = policy.action(x);
        let q = m.cost(x, a) + dp.beta * weighted_row_sum(m.kernel_row(x, a), v, None);
        policy_form = policy_form.max((v[x] - q).abs());
    }
    (min_form, policy_form)
}

/// Sup-norm defect of `v` against the total-cost optimality equation
/// `v(x) = min_a [c(x,a) + Σ_y v(y) q({y}|x,a)]` on the original kernel.
pub fn tcoe_residual(m: &FiniteMdp, v: &ValueVector) -> f64 {
    assert_eq!(v.len(), m.n_states(), "value length mismatch");
    let mut worst = 0.0_f64;
    for x in 0..m.n_states() {
        let (best, _) = bellman_min(m, 1.0, v, x);
        worst = worst.max((v[x] - best).abs());
    }
    worst
}

/// Sup-norm defect of `(w, h)` against the average-cost optimality equation
/// `w + h(x) = min_a [c(x,a) + Σ_y h(y) q({y}|x,a)]`.
pub fn acoe_residual(m: &FiniteMdp, w: f64, h: &ValueVector) -> Result<f64, SolveError> {
    if !m.is_row_stochastic(STOCHASTIC_TOL) {
        return Err(SolveError::NotStochastic);
    }
    assert_eq!(h.len(), m.n_states(), "bias length mismatch");
    let mut worst = 0.0_f64;
    for x in 0..m.n_states() {
        let (best, _) = bellman_min(m, 1.0, h, x);
        worst = worst.max((w + h[x] - best).abs());
    }
    Ok(worst)
}
