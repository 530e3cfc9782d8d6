//! Finite MDP data model and kernel primitives.
//!
//! A [`FiniteMdp`] has a finite state set, a nonempty finite action set per
//! state, a nonnegative one-step cost per state-action pair, and a transition
//! kernel whose rows are arbitrary finite nonnegative measures: the total row
//! mass may be below, at, or above one. Rows with zero mass model certain
//! termination. The kernel is stored sparsely as `(target, mass)` pairs,
//! sorted by target with duplicate targets merged.

use std::ops::Deref;

use thiserror::Error;

/// Sparse kernel row: `(target state index, mass)` pairs, sorted by target.
pub type SparseRow = Vec<(usize, f64)>;

/// Errors from constructing or consuming a [`FiniteMdp`].
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{field} has {got} entries, expected {expected}")]
    ShapeMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("state {state} has {got} action entries in {field}, expected {expected}")]
    ActionShapeMismatch {
        field: &'static str,
        state: usize,
        got: usize,
        expected: usize,
    },
    #[error("kernel target {target} out of range at state {state}, action {action} ({n_states} states)")]
    TargetOutOfRange {
        state: usize,
        action: usize,
        target: usize,
        n_states: usize,
    },
    #[error("no such state: index {0}")]
    NoSuchState(usize),
    #[error("policy has {got} choices, expected one per state ({expected})")]
    PolicyLength { got: usize, expected: usize },
    #[error("policy selects action {action} at state {state}, which has only {available} actions")]
    PolicyChoiceOutOfRange {
        state: usize,
        action: usize,
        available: usize,
    },
    #[error("policy not transient: {0}")]
    NotTransient(String),
}

/// A finite MDP with a sparse nonnegative transition kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    states: Vec<String>,
    actions: Vec<Vec<String>>,
    kernel: Vec<Vec<SparseRow>>,
    cost: Vec<Vec<f64>>,
}

impl FiniteMdp {
    /// Builds a model from per-state action lists, kernel rows and costs.
    ///
    /// `kernel[x][a]` lists `(target, mass)` pairs; duplicates are merged by
    /// summing and rows are sorted by target, so structurally equal models
    /// compare equal. Value-level invariants (nonnegative masses and costs,
    /// nonempty action sets) are reported by [`validate_model`], not here;
    /// only structural consistency is enforced.
    pub fn new(
        states: Vec<String>,
        actions: Vec<Vec<String>>,
        kernel: Vec<Vec<SparseRow>>,
        cost: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let n = states.len();
        if actions.len() != n {
            return Err(ModelError::ShapeMismatch {
                field: "actions",
                got: actions.len(),
                expected: n,
            });
        }
        if kernel.len() != n {
            return Err(ModelError::ShapeMismatch {
                field: "kernel",
                got: kernel.len(),
                expected: n,
            });
        }
        if cost.len() != n {
            return Err(ModelError::ShapeMismatch {
                field: "cost",
                got: cost.len(),
                expected: n,
            });
        }
        let mut kernel = kernel;
        for x in 0..n {
            let n_a = actions[x].len();
            if kernel[x].len() != n_a {
                return Err(ModelError::ActionShapeMismatch {
                    field: "kernel",
                    state: x,
                    got: kernel[x].len(),
                    expected: n_a,
                });
            }
            if cost[x].len() != n_a {
                return Err(ModelError::ActionShapeMismatch {
                    field: "cost",
                    state: x,
                    got: cost[x].len(),
                    expected: n_a,
                });
            }
            for (a, row) in kernel[x].iter_mut().enumerate() {
                for &(target, _) in row.iter() {
                    if target >= n {
                        return Err(ModelError::TargetOutOfRange {
                            state: x,
                            action: a,
                            target,
                            n_states: n,
                        });
                    }
                }
                row.sort_by_key(|&(t, _)| t);
                row.dedup_by(|b, a| {
                    if a.0 == b.0 {
                        a.1 += b.1;
                        true
                    } else {
                        false
                    }
                });
            }
        }
        Ok(FiniteMdp {
            states,
            actions,
            kernel,
            cost,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.states
    }

    pub fn state_label(&self, x: usize) -> &str {
        &self.states[x]
    }

    /// Linear scan; the CLI keeps its own label map for bulk resolution.
    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    pub fn n_actions(&self, x: usize) -> usize {
        self.actions[x].len()
    }

    pub fn action_labels(&self, x: usize) -> &[String] {
        &self.actions[x]
    }

    pub fn action_label(&self, x: usize, a: usize) -> &str {
        &self.actions[x][a]
    }

    pub fn kernel_row(&self, x: usize, a: usize) -> &[(usize, f64)] {
        &self.kernel[x][a]
    }

    pub fn cost(&self, x: usize, a: usize) -> f64 {
        self.cost[x][a]
    }

    /// Total row mass `q(X | x, a)`, the α of the kernel split.
    pub fn row_mass(&self, x: usize, a: usize) -> f64 {
        self.kernel[x][a].iter().map(|&(_, m)| m).sum()
    }

    /// Largest row mass over all state-action pairs (0 for an empty model).
    pub fn sup_row_mass(&self) -> f64 {
        let mut sup = 0.0_f64;
        for x in 0..self.n_states() {
            for a in 0..self.n_actions(x) {
                sup = sup.max(self.row_mass(x, a));
            }
        }
        sup
    }

    /// True when every row mass is 1 within `tol`.
    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        (0..self.n_states()).all(|x| {
            (0..self.n_actions(x)).all(|a| (self.row_mass(x, a) - 1.0).abs() <= tol)
        })
    }
}

/// Sums `mass * weights[target]` over a sparse row, optionally skipping one
/// target. All weighted row sums in the crate go through here so that
/// certification and transformation see bit-identical values.
pub(crate) fn weighted_row_sum(row: &[(usize, f64)], weights: &[f64], skip: Option<usize>) -> f64 {
    let mut acc = 0.0;
    for &(target, mass) in row {
        if Some(target) == skip {
            continue;
        }
        acc += mass * weights[target];
    }
    acc
}

/// A deterministic stationary policy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StationaryPolicy {
    choices: Vec<usize>,
}

impl StationaryPolicy {
    pub fn new(choices: Vec<usize>, m: &FiniteMdp) -> Result<Self, ModelError> {
        if choices.len() != m.n_states() {
            return Err(ModelError::PolicyLength {
                got: choices.len(),
                expected: m.n_states(),
            });
        }
        for (x, &a) in choices.iter().enumerate() {
            if a >= m.n_actions(x) {
                return Err(ModelError::PolicyChoiceOutOfRange {
                    state: x,
                    action: a,
                    available: m.n_actions(x),
                });
            }
        }
        Ok(StationaryPolicy { choices })
    }

    /// Builds a policy without checking it against a model. Only for callers
    /// that construct choices from the model itself.
    pub(crate) fn from_raw(choices: Vec<usize>) -> Self {
        StationaryPolicy { choices }
    }

    pub fn action(&self, x: usize) -> usize {
        self.choices[x]
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }
}

/// A real-valued function on the state set.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(Vec<f64>);

impl ValueVector {
    pub fn zeros(n: usize) -> Self {
        ValueVector(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ValueVector(vec![c; n])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &ValueVector) -> f64 {
        assert_eq!(self.len(), other.len(), "value vector length mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

impl From<Vec<f64>> for ValueVector {
    fn from(values: Vec<f64>) -> Self {
        ValueVector(values)
    }
}

impl Deref for ValueVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A single invariant violation found by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeMass { state: usize, action: usize, target: usize, mass: f64 },
    NonFiniteMass { state: usize, action: usize, target: usize },
    NegativeCost { state: usize, action: usize, cost: f64 },
    NonFiniteCost { state: usize, action: usize },
    EmptyActionSet { state: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NegativeMass { state, action, target, mass } => write!(
                f,
                "negative mass {mass} at state {state}, action {action}, target {target}"
            ),
            Violation::NonFiniteMass { state, action, target } => write!(
                f,
                "non-finite mass at state {state}, action {action}, target {target}"
            ),
            Violation::NegativeCost { state, action, cost } => {
                write!(f, "negative cost {cost} at state {state}, action {action}")
            }
            Violation::NonFiniteCost { state, action } => {
                write!(f, "non-finite cost at state {state}, action {action}")
            }
            Violation::EmptyActionSet { state } => write!(f, "empty action set at state {state}"),
        }
    }
}

/// Outcome of [`validate_model`]: the violations found plus the largest row
/// mass, which downstream certification uses as a crude transience hint.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub sup_row_mass: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the value-level invariants of a model. Reports, never fails.
pub fn validate_model(m: &FiniteMdp) -> ValidationReport {
    let mut violations = Vec::new();
    let mut sup_row_mass = 0.0_f64;
    for x in 0..m.n_states() {
        if m.n_actions(x) == 0 {
            violations.push(Violation::EmptyActionSet { state: x });
        }
        for a in 0..m.n_actions(x) {
            let mut row_mass = 0.0;
            for &(target, mass) in m.kernel_row(x, a) {
                if !mass.is_finite() {
                    violations.push(Violation::NonFiniteMass { state: x, action: a, target });
                } else if mass < 0.0 {
                    violations.push(Violation::NegativeMass { state: x, action: a, target, mass });
                } else {
                    row_mass += mass;
                }
            }
            sup_row_mass = sup_row_mass.max(row_mass);
            let c = m.cost(x, a);
            if !c.is_finite() {
                violations.push(Violation::NonFiniteCost { state: x, action: a });
            } else if c < 0.0 {
                violations.push(Violation::NegativeCost { state: x, action: a, cost: c });
            }
        }
    }
    ValidationReport { violations, sup_row_mass }
}

/// The row-mass/probability decomposition of a kernel: `q = α · p` wherever
/// the row mass α is positive. `p` is undefined (None) on zero-mass rows and
/// nothing downstream may read it there; the transformations work on `q`
/// directly.
#[derive(Debug, Clone)]
pub struct KernelSplit {
    pub alpha: Vec<Vec<f64>>,
    pub p: Vec<Vec<Option<SparseRow>>>,
}

/// Splits the kernel into row masses and normalized rows.
pub fn split_kernel(m: &FiniteMdp) -> KernelSplit {
    let mut alpha = Vec::with_capacity(m.n_states());
    let mut p = Vec::with_capacity(m.n_states());
    for x in 0..m.n_states() {
        let mut alpha_x = Vec::with_capacity(m.n_actions(x));
        let mut p_x = Vec::with_capacity(m.n_actions(x));
        for a in 0..m.n_actions(x) {
            let mass = m.row_mass(x, a);
            alpha_x.push(mass);
            if mass > 0.0 {
                p_x.push(Some(
                    m.kernel_row(x, a)
                        .iter()
                        .map(|&(t, q)| (t, q / mass))
                        .collect(),
                ));
            } else {
                p_x.push(None);
            }
        }
        alpha.push(alpha_x);
        p.push(p_x);
    }
    KernelSplit { alpha, p }
}

/// One application of the policy kernel: `x ↦ Σ_y u(y) q({y} | x, φ(x))`.
pub fn apply_kernel(m: &FiniteMdp, policy: &StationaryPolicy, u: &ValueVector) -> ValueVector {
    assert_eq!(u.len(), m.n_states(), "value vector length mismatch");
    let out: Vec<f64> = (0..m.n_states())
        .map(|x| weighted_row_sum(m.kernel_row(x, policy.action(x)), u, None))
        .collect();
    ValueVector::from(out)
}

/// Like [`apply_kernel`] but mass into the taboo state `ell` is dropped.
pub fn taboo_apply(
    m: &FiniteMdp,
    policy: &StationaryPolicy,
    ell: usize,
    u: &ValueVector,
) -> Result<ValueVector, ModelError> {
    if ell >= m.n_states() {
        return Err(ModelError::NoSuchState(ell));
    }
    assert_eq!(u.len(), m.n_states(), "value vector length mismatch");
    let out: Vec<f64> = (0..m.n_states())
        .map(|x| weighted_row_sum(m.kernel_row(x, policy.action(x)), u, Some(ell)))
        .collect();
    Ok(ValueVector::from(out))
}

/// Exact expected total cost of a stationary policy: the unique finite
/// nonnegative solution of `v = c_φ + Q_φ v`, when one exists.
pub fn policy_total_cost(
    m: &FiniteMdp,
    policy: &StationaryPolicy,
) -> Result<ValueVector, ModelError> {
    let n = m.n_states();
    let rows: Vec<&[(usize, f64)]> = (0..n).map(|x| m.kernel_row(x, policy.action(x))).collect();
    let rhs: Vec<f64> = (0..n).map(|x| m.cost(x, policy.action(x))).collect();
    let v = crate::linalg::solve_i_minus(&rows, &rhs)
        .map_err(|e| ModelError::NotTransient(e.to_string()))?;
    // A transient policy has a finite nonnegative total cost; reject anything
    // else as evidence the linear system does not describe a total cost.
    let scale = 1.0 + v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    for &value in &v {
        if !value.is_finite() || value < -1e-9 * scale {
            return Err(ModelError::NotTransient(format!(
                "solution entry {value} is negative or non-finite"
            )));
        }
    }
    Ok(ValueVector::from(v))
}
