//! Brute-force ground truth on small instances.
//!
//! Exhaustive enumeration of deterministic stationary policies with exact
//! per-policy evaluation: total cost via the linear system `v = c_φ + Q_φ v`
//! and long-run average cost via the renewal ratio at a marked state. The
//! test suites compare every reduction against these.

use thiserror::Error;

use crate::mdp::{policy_total_cost, FiniteMdp, ModelError, StationaryPolicy, ValueVector};

/// Default cap on the number of policies an oracle call may enumerate.
pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;

const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for oracle: {policies} policies exceed cap {cap}")]
    TooLarge { policies: u64, cap: u64 },
    #[error("no such state: index {0}")]
    NoSuchState(usize),
    #[error("average-cost oracle requires a row-stochastic kernel")]
    NotStochastic,
    #[error("marked state not reached under this policy: {0}")]
    MarkedStateNotReached(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Iterator over every deterministic stationary policy, lexicographic in the
/// per-state action indices.
pub struct PolicyIter<'a> {
    m: &'a FiniteMdp,
    next: Option<Vec<usize>>,
}

impl<'a> Iterator for PolicyIter<'a> {
    type Item = StationaryPolicy;

    fn next(&mut self) -> Option<StationaryPolicy> {
        let current = self.next.take()?;
        let policy = StationaryPolicy::from_raw(current.clone());
        // Odometer increment, most significant digit first.
        let mut odometer = current;
        for x in (0..odometer.len()).rev() {
            odometer[x] += 1;
            if odometer[x] < self.m.n_actions(x) {
                self.next = Some(odometer);
                return Some(policy);
            }
            odometer[x] = 0;
        }
        Some(policy)
    }
}

/// Counts `Π_x |A(x)|` and yields every policy when it is within `cap`.
pub fn enumerate_policies(m: &FiniteMdp, cap: u64) -> Result<PolicyIter<'_>, OracleError> {
    let mut count: u64 = 1;
    for x in 0..m.n_states() {
        count = count
            .checked_mul(m.n_actions(x) as u64)
            .filter(|&c| c <= cap)
            .ok_or(OracleError::TooLarge { policies: u64::MAX, cap })?;
    }
    if count > cap {
        return Err(OracleError::TooLarge { policies: count, cap });
    }
    Ok(PolicyIter {
        m,
        next: Some(vec![0; m.n_states()]),
    })
}

/// Exact number of deterministic stationary policies.
pub fn policy_count(m: &FiniteMdp) -> u64 {
    (0..m.n_states()).fold(1u64, |acc, x| acc.saturating_mul(m.n_actions(x) as u64))
}

/// Exact expected total cost of a policy. Same contract as
/// [`policy_total_cost`].
pub fn exact_total_cost(
    m: &FiniteMdp,
    policy: &StationaryPolicy,
) -> Result<ValueVector, OracleError> {
    Ok(policy_total_cost(m, policy)?)
}

/// Exact long-run average cost of a policy on a row-stochastic model, as the
/// renewal ratio at the marked state `ell`: expected cycle cost over expected
/// cycle length, both taken from `ell` back to `ell`.
pub fn exact_average_cost(
    m: &FiniteMdp,
    policy: &StationaryPolicy,
    ell: usize,
) -> Result<f64, OracleError> {
    if ell >= m.n_states() {
        return Err(OracleError::NoSuchState(ell));
    }
    if !m.is_row_stochastic(STOCHASTIC_TOL) {
        return Err(OracleError::NotStochastic);
    }
    let n = m.n_states();
    // Taboo rows: the selected kernel rows with mass into ell removed.
    let taboo_rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|x| {
            m.kernel_row(x, policy.action(x))
                .iter()
                .copied()
                .filter(|&(t, _)| t != ell)
                .collect()
        })
        .collect();
    let row_refs: Vec<&[(usize, f64)]> = taboo_rows.iter().map(|r| r.as_slice()).collect();
    let costs: Vec<f64> = (0..n).map(|x| m.cost(x, policy.action(x))).collect();
    let ones = vec![1.0; n];

    let cycle_cost = crate::linalg::solve_i_minus(&row_refs, &costs)
        .map_err(|e| OracleError::MarkedStateNotReached(e.to_string()))?;
    let cycle_len = crate::linalg::solve_i_minus(&row_refs, &ones)
        .map_err(|e| OracleError::MarkedStateNotReached(e.to_string()))?;
    if !cycle_len[ell].is_finite() || cycle_len[ell] < 1.0 - 1e-9 {
        return Err(OracleError::MarkedStateNotReached(format!(
            "cycle length {} at the marked state",
            cycle_len[ell]
        )));
    }
    Ok(cycle_cost[ell] / cycle_len[ell])
}

/// Which objective [`brute_force_optimum`] minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleCriterion {
    TotalCost,
    AverageCost { ell: usize },
}

/// Result of an exhaustive policy sweep.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_policy: StationaryPolicy,
    /// Entrywise minimum over all policies (total-cost criterion).
    pub best_total: Option<ValueVector>,
    /// Scalar minimum over all policies (average-cost criterion).
    pub best_average: Option<f64>,
    /// Per-policy values, kept only when requested.
    pub per_policy: Option<Vec<(StationaryPolicy, Vec<f64>)>>,
    pub policies_enumerated: u64,
    /// Whether a single policy attains the entrywise minimum at every state
    /// simultaneously. Always true on the average criterion.
    pub simultaneous_optimum: bool,
}

/// Enumerates every policy and returns the minimum of the chosen criterion.
pub fn brute_force_optimum(
    m: &FiniteMdp,
    criterion: OracleCriterion,
    cap: u64,
    keep_table: bool,
) -> Result<OracleResult, OracleError> {
    let mut enumerated: u64 = 0;
    let mut table = Vec::new();
    match criterion {
        OracleCriterion::TotalCost => {
            let mut entrywise_min: Option<Vec<f64>> = None;
            let mut best: Option<(StationaryPolicy, Vec<f64>)> = None;
            for policy in enumerate_policies(m, cap)? {
                let v = exact_total_cost(m, &policy)?;
                enumerated += 1;
                let v = v.into_vec();
                match &mut entrywise_min {
                    None => entrywise_min = Some(v.clone()),
                    Some(minv) => {
                        for (m_i, &v_i) in minv.iter_mut().zip(v.iter()) {
                            *m_i = m_i.min(v_i);
                        }
                    }
                }
                let better = match &best {
                    None => true,
                    Some((_, bv)) => v.iter().sum::<f64>() < bv.iter().sum::<f64>(),
                };
                if better {
                    best = Some((policy.clone(), v.clone()));
                }
                if keep_table {
                    table.push((policy, v));
                }
            }
            let entrywise_min = entrywise_min.expect("at least one policy");
            let (best_policy, best_vec) = best.expect("at least one policy");
            let scale = 1.0 + entrywise_min.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let simultaneous = best_vec
                .iter()
                .zip(entrywise_min.iter())
                .all(|(b, m)| (b - m).abs() <= 1e-9 * scale);
            Ok(OracleResult {
                best_policy,
                best_total: Some(ValueVector::from(entrywise_min)),
                best_average: None,
                per_policy: keep_table.then_some(table),
                policies_enumerated: enumerated,
                simultaneous_optimum: simultaneous,
            })
        }
        OracleCriterion::AverageCost { ell } => {
            let mut best: Option<(StationaryPolicy, f64)> = None;
            for policy in enumerate_policies(m, cap)? {
                let w = exact_average_cost(m, &policy, ell)?;
                enumerated += 1;
                if best.as_ref().is_none_or(|(_, bw)| w < *bw) {
                    best = Some((policy.clone(), w));
                }
                if keep_table {
                    table.push((policy, vec![w]));
                }
            }
            let (best_policy, best_w) = best.expect("at least one policy");
            Ok(OracleResult {
                best_policy,
                best_total: None,
                best_average: Some(best_w),
                per_policy: keep_table.then_some(table),
                policies_enumerated: enumerated,
                simultaneous_optimum: true,
            })
        }
    }
}
