//! The two exact rewrites of an undiscounted MDP into a discounted one.
//!
//! Both constructions tilt the kernel by a certified weight, scale the costs
//! by its reciprocal, and route the surplus row mass to an added cost-free
//! absorbing state, chosen so every transformed row is a probability
//! measure. The total-cost rewrite ([`hv_transform`]) uses the occupation
//! weight μ and relates values by `v = μ · ṽ`. The average-cost rewrite
//! ([`hvag_transform`]) uses the marked-state weight μ_ℓ, routes mass both to
//! the marked state and to the absorbing state, and recovers the optimal
//! average cost as the discounted value at the marked state.
//!
//! Original state indices are preserved; the absorbing state is appended at
//! index `|X|`, so the lift maps are index-stable.

use thiserror::Error;

use crate::bounding::{WeightFunction, WeightRole};
use crate::mdp::{weighted_row_sum, FiniteMdp, ModelError, StationaryPolicy, ValueVector};

/// Row sums of a transformed kernel must land within this of one.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Negative masses within this of zero are float noise and are clamped;
/// anything worse is a precondition violation.
pub const MASS_CLAMP: f64 = 1e-12;

/// Largest accepted discount factor.
pub const MAX_BETA: f64 = 1.0 - 1e-6;

/// Tolerance on the discounted value at the absorbing state when lifting.
pub const ABSORBING_VALUE_TOL: f64 = 1e-9;

const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("discount factor {0} outside (0, {MAX_BETA}]")]
    BadBeta(f64),
    #[error("weight length {got} does not match model with {expected} states")]
    WeightLength { got: usize, expected: usize },
    #[error("weight is for marked state {weight_ell}, but the transform was asked for {asked}")]
    MarkedStateMismatch { weight_ell: usize, asked: usize },
    #[error("no such state: index {0}")]
    NoSuchState(usize),
    #[error(
        "weight does not satisfy the occupation inequality at state {state}, action {action} \
         (absorbing mass {mass:.3e}); recompute the weight"
    )]
    OccupationViolated { state: usize, action: usize, mass: f64 },
    #[error(
        "weight does not satisfy the taboo occupation inequality at state {state}, action \
         {action} (mass to marked state {mass:.3e}); recompute the weight"
    )]
    TabooOccupationViolated { state: usize, action: usize, mass: f64 },
    #[error(
        "discount factor {beta} is below the admissible minimum for this weight (absorbing \
         mass {mass:.3e} at state {state}, action {action})"
    )]
    BetaBelowMinimum { beta: f64, state: usize, action: usize, mass: f64 },
    #[error("transformed row at state {state}, action {action} sums to 1{defect:+.3e}")]
    RowSumDefect { state: usize, action: usize, defect: f64 },
    #[error("expected a total-cost reduction, got an average-cost one")]
    NotTotalCost,
    #[error("expected an average-cost reduction, got a total-cost one")]
    NotAverageCost,
    #[error("absorbing state has nonzero value {0:.3e}")]
    AbsorbingValueNonzero(f64),
    #[error("average-cost reduction requires a row-stochastic kernel")]
    NotStochastic,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which rewrite produced a [`DiscountedProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Hv,
    HvAg,
}

/// A discounted MDP produced by one of the rewrites: a row-stochastic model
/// together with the discount factor, the location of the added absorbing
/// state, and the weight baked into the kernel tilt.
#[derive(Debug, Clone)]
pub struct DiscountedProblem {
    pub mdp: FiniteMdp,
    pub beta: f64,
    pub absorbing_state: usize,
    pub marked_ell: Option<usize>,
    pub weight_used: WeightFunction,
    pub kind: TransformKind,
    /// Largest pre-renormalization deviation of a row sum from one.
    pub row_sum_max_defect: f64,
}

impl DiscountedProblem {
    /// Number of original (pre-rewrite) states.
    pub fn n_original_states(&self) -> usize {
        self.absorbing_state
    }

    /// Extends a policy on the original model by the single absorbing-state
    /// action.
    pub fn lift_policy(&self, policy: &StationaryPolicy) -> StationaryPolicy {
        let mut choices = policy.choices().to_vec();
        choices.push(0);
        StationaryPolicy::from_raw(choices)
    }

    /// Restricts a policy on the transformed model to the original states.
    pub fn restrict_policy(&self, policy: &StationaryPolicy) -> StationaryPolicy {
        StationaryPolicy::from_raw(policy.choices()[..self.absorbing_state].to_vec())
    }
}

/// The lifted solution of an average-cost reduction.
#[derive(Debug, Clone)]
pub struct LiftedAverageSolution {
    /// Optimal long-run average cost, the discounted value at the marked
    /// state.
    pub w: f64,
    /// Bias (relative value) function; zero at the marked state.
    pub h: ValueVector,
    pub beta: f64,
    pub marked_ell: usize,
}

fn absorbing_label(m: &FiniteMdp) -> String {
    let mut label = "~absorbing".to_string();
    while m.state_index(&label).is_some() {
        label.push('~');
    }
    label
}

fn check_beta(beta: f64) -> Result<(), TransformError> {
    if !(beta > 0.0 && beta <= MAX_BETA) {
        return Err(TransformError::BadBeta(beta));
    }
    Ok(())
}

/// Clamps float-noise negatives, checks the row sum, and renormalizes it to
/// one. Returns the pre-renormalization defect.
fn finish_row(
    row: &mut Vec<(usize, f64)>,
    state: usize,
    action: usize,
) -> Result<f64, TransformError> {
    for &mut (_, mass) in row.iter_mut() {
        debug_assert!(mass >= -MASS_CLAMP, "caller must reject masses below the clamp window");
        let _ = mass;
    }
    for entry in row.iter_mut() {
        if entry.1 < 0.0 {
            entry.1 = 0.0;
        }
    }
    let sum: f64 = row.iter().map(|&(_, m)| m).sum();
    let defect = sum - 1.0;
    if defect.abs() > ROW_SUM_TOL {
        return Err(TransformError::RowSumDefect { state, action, defect });
    }
    if sum > 0.0 && sum != 1.0 {
        for entry in row.iter_mut() {
            entry.1 /= sum;
        }
    }
    row.retain(|&(_, m)| m > 0.0);
    Ok(defect.abs())
}

/// Rewrites a transient total-cost model into a discounted one: kernel rows
/// are tilted by the occupation weight and divided by `beta · μ(x)`, costs
/// become `c/μ`, and the remaining mass goes to the new absorbing state.
///
/// Requires `beta` at least `(k_hat - 1)/k_hat` for the weight's certified
/// constant; smaller values surface as negative absorbing mass.
pub fn hv_transform(
    m: &FiniteMdp,
    weight: &WeightFunction,
    beta: f64,
) -> Result<DiscountedProblem, TransformError> {
    check_beta(beta)?;
    let n = m.n_states();
    if weight.len() != n {
        return Err(TransformError::WeightLength { got: weight.len(), expected: n });
    }
    if let WeightRole::TabooOccupation { ell } = weight.role() {
        return Err(TransformError::MarkedStateMismatch { weight_ell: *ell, asked: usize::MAX });
    }
    let absorbing = n;
    let mut states: Vec<String> = m.state_labels().to_vec();
    states.push(absorbing_label(m));
    let mut actions: Vec<Vec<String>> = Vec::with_capacity(n + 1);
    let mut kernel: Vec<Vec<Vec<(usize, f64)>>> = Vec::with_capacity(n + 1);
    let mut cost: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut max_defect = 0.0_f64;

    for x in 0..n {
        let mu_x = weight.value(x);
        let scale = beta * mu_x;
        let mut k_rows = Vec::with_capacity(m.n_actions(x));
        let mut c_row = Vec::with_capacity(m.n_actions(x));
        for a in 0..m.n_actions(x) {
            let mut row: Vec<(usize, f64)> = m
                .kernel_row(x, a)
                .iter()
                .map(|&(t, mass)| (t, weight.value(t) * mass / scale))
                .collect();
            let tilted: f64 = row.iter().map(|&(_, m)| m).sum();
            let to_absorbing = 1.0 - tilted;
            if to_absorbing < -MASS_CLAMP {
                // The tilted mass exceeds beta * mu(x): either the weight
                // fails the occupation inequality (no reference weight >= 1
                // could repair it) or beta is below the admissible minimum.
                // The inequality binds at the maximizing action, so allow
                // rounding headroom before blaming the weight.
                let occupation = weighted_row_sum(m.kernel_row(x, a), weight.values(), None);
                if occupation > (mu_x - 1.0) + 1e-9 * mu_x {
                    return Err(TransformError::OccupationViolated {
                        state: x,
                        action: a,
                        mass: to_absorbing,
                    });
                }
                return Err(TransformError::BetaBelowMinimum {
                    beta,
                    state: x,
                    action: a,
                    mass: to_absorbing,
                });
            }
            row.push((absorbing, to_absorbing.max(0.0)));
            max_defect = max_defect.max(finish_row(&mut row, x, a)?);
            k_rows.push(row);
            c_row.push(m.cost(x, a) / mu_x);
        }
        actions.push(m.action_labels(x).to_vec());
        kernel.push(k_rows);
        cost.push(c_row);
    }
    actions.push(vec!["~stay".to_string()]);
    kernel.push(vec![vec![(absorbing, 1.0)]]);
    cost.push(vec![0.0]);

    Ok(DiscountedProblem {
        mdp: FiniteMdp::new(states, actions, kernel, cost)?,
        beta,
        absorbing_state: absorbing,
        marked_ell: None,
        weight_used: weight.clone(),
        kind: TransformKind::Hv,
        row_sum_max_defect: max_defect,
    })
}

/// Rewrites an average-cost model into a discounted one around the marked
/// state `ell`: rows are tilted by the marked-state weight on the taboo
/// part, the taboo-inequality slack is routed to `ell`, and the rest goes to
/// the new absorbing state.
pub fn hvag_transform(
    m: &FiniteMdp,
    ell: usize,
    weight: &WeightFunction,
    beta: f64,
) -> Result<DiscountedProblem, TransformError> {
    check_beta(beta)?;
    let n = m.n_states();
    if ell >= n {
        return Err(TransformError::NoSuchState(ell));
    }
    if weight.len() != n {
        return Err(TransformError::WeightLength { got: weight.len(), expected: n });
    }
    if let WeightRole::TabooOccupation { ell: weight_ell } = weight.role() {
        if *weight_ell != ell {
            return Err(TransformError::MarkedStateMismatch {
                weight_ell: *weight_ell,
                asked: ell,
            });
        }
    }
    if !m.is_row_stochastic(STOCHASTIC_TOL) {
        return Err(TransformError::NotStochastic);
    }
    let absorbing = n;
    let mut states: Vec<String> = m.state_labels().to_vec();
    states.push(absorbing_label(m));
    let mut actions: Vec<Vec<String>> = Vec::with_capacity(n + 1);
    let mut kernel: Vec<Vec<Vec<(usize, f64)>>> = Vec::with_capacity(n + 1);
    let mut cost: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut max_defect = 0.0_f64;

    for x in 0..n {
        let mu_x = weight.value(x);
        let scale = beta * mu_x;
        let mut k_rows = Vec::with_capacity(m.n_actions(x));
        let mut c_row = Vec::with_capacity(m.n_actions(x));
        for a in 0..m.n_actions(x) {
            // Tilted taboo part: targets other than ell.
            let mut row: Vec<(usize, f64)> = m
                .kernel_row(x, a)
                .iter()
                .filter(|&&(t, _)| t != ell)
                .map(|&(t, mass)| (t, weight.value(t) * mass / scale))
                .collect();
            let taboo_sum = weighted_row_sum(m.kernel_row(x, a), weight.values(), Some(ell));
            let slack = (mu_x - 1.0) - taboo_sum;
            let to_ell = slack / scale;
            if to_ell < -MASS_CLAMP {
                return Err(TransformError::TabooOccupationViolated {
                    state: x,
                    action: a,
                    mass: to_ell,
                });
            }
            let to_absorbing = 1.0 - (mu_x - 1.0) / scale;
            if to_absorbing < -MASS_CLAMP {
                return Err(TransformError::BetaBelowMinimum {
                    beta,
                    state: x,
                    action: a,
                    mass: to_absorbing,
                });
            }
            row.push((ell, to_ell.max(0.0)));
            row.push((absorbing, to_absorbing.max(0.0)));
            // Merge in case a tilted target coincides with ell's slot.
            row.sort_by_key(|&(t, _)| t);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (t, mass) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == t => last.1 += mass,
                    _ => merged.push((t, mass)),
                }
            }
            let mut row = merged;
            max_defect = max_defect.max(finish_row(&mut row, x, a)?);
            k_rows.push(row);
            c_row.push(m.cost(x, a) / mu_x);
        }
        actions.push(m.action_labels(x).to_vec());
        kernel.push(k_rows);
        cost.push(c_row);
    }
    actions.push(vec!["~stay".to_string()]);
    kernel.push(vec![vec![(absorbing, 1.0)]]);
    cost.push(vec![0.0]);

    Ok(DiscountedProblem {
        mdp: FiniteMdp::new(states, actions, kernel, cost)?,
        beta,
        absorbing_state: absorbing,
        marked_ell: Some(ell),
        weight_used: weight.clone(),
        kind: TransformKind::HvAg,
        row_sum_max_defect: max_defect,
    })
}

/// Lifts the discounted value of a total-cost reduction back to the original
/// model: `v(x) = μ(x) · ṽ(x)` on the original states.
pub fn lift_total_value(
    dp: &DiscountedProblem,
    discounted_value: &ValueVector,
) -> Result<ValueVector, TransformError> {
    if dp.kind != TransformKind::Hv {
        return Err(TransformError::NotTotalCost);
    }
    assert_eq!(discounted_value.len(), dp.mdp.n_states(), "value length mismatch");
    let at_absorbing = discounted_value[dp.absorbing_state];
    if at_absorbing.abs() > ABSORBING_VALUE_TOL {
        return Err(TransformError::AbsorbingValueNonzero(at_absorbing));
    }
    let lifted: Vec<f64> = (0..dp.n_original_states())
        .map(|x| dp.weight_used.value(x) * discounted_value[x])
        .collect();
    Ok(ValueVector::from(lifted))
}

/// Lifts the discounted value of an average-cost reduction: the optimal
/// average cost is the value at the marked state, and the bias is
/// `h(x) = μ_ℓ(x) · (v̄(x) − v̄(ℓ))`.
pub fn lift_average_solution(
    dp: &DiscountedProblem,
    discounted_value: &ValueVector,
) -> Result<LiftedAverageSolution, TransformError> {
    if dp.kind != TransformKind::HvAg {
        return Err(TransformError::NotAverageCost);
    }
    let ell = dp.marked_ell.ok_or(TransformError::NotAverageCost)?;
    assert_eq!(discounted_value.len(), dp.mdp.n_states(), "value length mismatch");
    let w = discounted_value[ell];
    let h: Vec<f64> = (0..dp.n_original_states())
        .map(|x| dp.weight_used.value(x) * (discounted_value[x] - w))
        .collect();
    Ok(LiftedAverageSolution {
        w,
        h: ValueVector::from(h),
        beta: dp.beta,
        marked_ell: ell,
    })
}
