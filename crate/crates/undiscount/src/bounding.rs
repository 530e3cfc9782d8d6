//! Weight-function certification for transient and marked-state models.
//!
//! The central object is the maximization operator
//! `𝒰u(x) = max_a [V(x) + Σ_y u(y) q({y}|x,a)]`, iterated from `u ≡ 0`. When
//! the model is uniformly transient the iterates increase to a fixed point μ
//! with `V ≤ μ ≤ K·V`; μ(x) is the largest weighted occupation sum over all
//! stationary policies and satisfies the occupation inequality
//! `μ(x) ≥ V(x) + Σ_y μ(y) q({y}|x,a)` for every action. [`compute_mu_ell`]
//! runs the same iteration with unit weights on the taboo kernel of a marked
//! state, yielding the largest expected number of epochs before the marked
//! state is hit.
//!
//! The returned weight is deliberately a certified *supersolution*: the final
//! iterate is inflated by a factor `1 + ε` (ε on the order of the last
//! increment) and then re-verified, so the occupation inequality holds up to
//! float rounding rather than up to the stopping tolerance. Downstream
//! transformations rely on that slack to produce nonnegative probability
//! rows without clamping beyond noise level.
//!
//! Contraction diagnostics measure successive increment ratios in the
//! weighted sup-norm of a caller-chosen weight. The operator provably
//! contracts with modulus `(K-1)/K` in the norm weighted by the fixed point
//! itself, so certification passes the computed μ as the weight.

use std::collections::VecDeque;

use thiserror::Error;

use crate::mdp::{validate_model, weighted_row_sum, FiniteMdp};

/// Iterates whose sup over `V` exceeds this are declared divergent.
pub const DIVERGENCE_CAP: f64 = 1e12;

/// Window length for the increments-fail-to-shrink divergence heuristic.
const SHRINK_WINDOW: usize = 50;

/// Window of recent increment ratios used for the running contraction
/// estimate in the stopping rule.
const RATIO_WINDOW: usize = 10;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("Assumption T appears violated: {detail}")]
    TransienceViolated { detail: String },
    #[error("Assumption HT appears violated for marked state {ell}: {detail}")]
    HittingViolated { ell: usize, detail: String },
    #[error("iteration limit {0} reached before convergence")]
    IterationLimit(usize),
    #[error("requested tolerance is below float resolution; achieved residual {achieved:.3e}")]
    ToleranceTooTight { achieved: f64 },
    #[error("tolerance must be positive and finite")]
    BadTolerance,
    #[error("weight entries must be finite and at least 1")]
    InvalidWeight,
    #[error("model is invalid: {0}")]
    InvalidModel(String),
    #[error("no such state: index {0}")]
    NoSuchState(usize),
    #[error("need at least 3 recorded iterates, got {0}")]
    TraceTooShort(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Which role a weight plays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightRole {
    /// Caller-supplied reference weight (the V of the V-norm).
    Reference,
    /// Certified bound on weighted occupation sums over all policies.
    Occupation,
    /// Certified bound on expected epochs before hitting the marked state.
    TabooOccupation { ell: usize },
}

/// A per-state weight in `[1, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    values: Vec<f64>,
    role: WeightRole,
}

impl WeightFunction {
    pub fn new(values: Vec<f64>, role: WeightRole) -> Result<Self, BoundError> {
        if values.iter().any(|v| !v.is_finite() || *v < 1.0) {
            return Err(BoundError::InvalidWeight);
        }
        Ok(WeightFunction { values, role })
    }

    /// The unit weight, matching bounded-cost models.
    pub fn ones(n: usize) -> Self {
        WeightFunction {
            values: vec![1.0; n],
            role: WeightRole::Reference,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn role(&self) -> &WeightRole {
        &self.role
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Weighted sup-norm `sup_x |f(x)| / V(x)`.
pub fn v_norm(f: &[f64], weight: &WeightFunction) -> f64 {
    assert_eq!(f.len(), weight.len(), "v_norm dimension mismatch");
    weighted_sup(f, weight.values())
}

fn weighted_sup(f: &[f64], w: &[f64]) -> f64 {
    f.iter()
        .zip(w.iter())
        .fold(0.0_f64, |acc, (v, wv)| acc.max(v.abs() / wv))
}

/// The recorded iterates of a certification run. `states` maps trace columns
/// back to original state indices (the taboo iteration runs on the state set
/// minus the marked state).
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub states: Vec<usize>,
    pub iterates: Vec<Vec<f64>>,
}

/// Outcome of [`compute_mu`] or [`compute_mu_ell`].
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub weight: WeightFunction,
    /// Certified constant `(1 + tol) · sup_x weight(x)/V(x)`.
    pub k_hat: f64,
    /// The raw ratio `sup_x weight(x)/V(x)` without headroom.
    pub sup_weight_ratio: f64,
    /// For marked-state runs, the certified constant restricted to the
    /// states other than the marked one.
    pub k_hat_excluding_marked: Option<f64>,
    pub iterations: usize,
    /// Fixed-point defect of the returned weight in the V-norm.
    pub residual: f64,
    pub certified: bool,
    pub trace: IterationTrace,
    pub tol: f64,
}

impl BoundReport {
    /// Smallest admissible discount factor for the reductions built from
    /// this certificate.
    pub fn min_admissible_beta(&self) -> f64 {
        (self.k_hat - 1.0) / self.k_hat
    }

    /// Certifies the per-step contraction of the recorded run, measuring
    /// increments in the sup-norm weighted by the computed fixed point (the
    /// norm in which the operator provably contracts with modulus
    /// `(k_hat - 1)/k_hat`).
    pub fn contraction_certificate(&self, slack: f64) -> Result<ContractionReport, BoundError> {
        let restricted: Vec<f64> = self
            .trace
            .states
            .iter()
            .map(|&x| self.weight.value(x))
            .collect();
        let weight = WeightFunction::new(restricted, WeightRole::Reference)?;
        contraction_diagnostics(&self.trace, &weight, self.k_hat, slack)
    }
}

/// Per-step increment ratios of a recorded run.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    /// Ratios `‖u_{n+1} − u_n‖ / ‖u_n − u_{n−1}‖` whose denominators were
    /// above the float noise floor.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// The certified bound `(k_hat − 1)/k_hat + slack`.
    pub bound: f64,
    pub ratios_evaluated: usize,
    /// Steps skipped because the increment had decayed to rounding level,
    /// where a ratio of two quantization errors carries no information.
    pub ratios_skipped: usize,
    pub certified: bool,
}

/// Computes per-step increment ratios of `trace` in the weighted sup-norm of
/// `weight` and certifies them against `(k_hat − 1)/k_hat + slack`.
pub fn contraction_diagnostics(
    trace: &IterationTrace,
    weight: &WeightFunction,
    k_hat: f64,
    slack: f64,
) -> Result<ContractionReport, BoundError> {
    if trace.iterates.len() < 3 {
        return Err(BoundError::TraceTooShort(trace.iterates.len()));
    }
    if !slack.is_finite() || slack <= 0.0 {
        return Err(BoundError::BadTolerance);
    }
    let width = trace.states.len();
    if weight.len() != width || trace.iterates.iter().any(|u| u.len() != width) {
        return Err(BoundError::Dimension(format!(
            "trace width {width} vs weight length {}",
            weight.len()
        )));
    }
    let bound = (k_hat - 1.0) / k_hat + slack;

    // Degenerate zero-width traces certify vacuously.
    if width == 0 {
        return Ok(ContractionReport {
            ratios: Vec::new(),
            max_ratio: 0.0,
            bound,
            ratios_evaluated: 0,
            ratios_skipped: 0,
            certified: true,
        });
    }

    let w = weight.values();
    let norms: Vec<f64> = trace
        .iterates
        .windows(2)
        .map(|pair| {
            let d: Vec<f64> = pair[1].iter().zip(pair[0].iter()).map(|(b, a)| b - a).collect();
            weighted_sup(&d, w)
        })
        .collect();
    let u_sup = trace
        .iterates
        .iter()
        .map(|u| weighted_sup(u, w))
        .fold(0.0_f64, f64::max);
    // Below this, an increment is dominated by accumulated rounding of the
    // iterates and a ratio would measure quantization, not contraction.
    let floor = 16.0 * f64::EPSILON * u_sup.max(1.0) / slack;

    let mut ratios = Vec::new();
    let mut skipped = 0usize;
    for n in 0..norms.len().saturating_sub(1) {
        if norms[n] >= floor {
            ratios.push(norms[n + 1] / norms[n]);
        } else {
            skipped += 1;
        }
    }
    let max_ratio = ratios.iter().fold(0.0_f64, |a, r| a.max(*r));
    let certified = ratios.iter().all(|r| *r <= bound);
    Ok(ContractionReport {
        ratios_evaluated: ratios.len(),
        ratios,
        max_ratio,
        bound,
        ratios_skipped: skipped,
        certified,
    })
}

// ── Iteration engine ─────────────────────────────────────────────────────

struct SweepSystem {
    base: Vec<f64>,
    rows: Vec<Vec<Vec<(usize, f64)>>>,
}

impl SweepSystem {
    fn sweep(&self, u: &[f64]) -> Vec<f64> {
        self.base
            .iter()
            .zip(self.rows.iter())
            .map(|(b, actions)| {
                let mut best = f64::NEG_INFINITY;
                for row in actions {
                    let val = b + weighted_row_sum(row, u, None);
                    if val > best {
                        best = val;
                    }
                }
                best
            })
            .collect()
    }
}

struct EngineOutput {
    weight: Vec<f64>,
    iterations: usize,
    residual: f64,
    trace: Vec<Vec<f64>>,
    sup_ratio: f64,
}

enum EngineFailure {
    Divergence { detail: String },
    IterationLimit(usize),
    ToleranceTooTight { achieved: f64 },
}

/// Runs the monotone iteration `u_{n+1} = 𝒰u_n` from `u_0 ≡ 0`, inflates the
/// final iterate into a verified supersolution, and measures its fixed-point
/// defect.
fn run_weight_iteration(
    sys: &SweepSystem,
    tol: f64,
    max_iter: usize,
) -> Result<EngineOutput, EngineFailure> {
    let n = sys.base.len();
    let mut u = vec![0.0_f64; n];
    let mut trace = vec![u.clone()];
    let mut increments: Vec<f64> = Vec::new();
    let mut ratio_window: VecDeque<f64> = VecDeque::new();
    let mut iterations = 0usize;
    // Tightened by 4x each time the post-hoc defect check rejects a stop.
    let mut shrink = 1.0_f64;

    loop {
        // Sweep until the geometric-tail stopping rule fires.
        let mut last_dv;
        loop {
            if iterations >= max_iter {
                let growing = increments
                    .len()
                    .checked_sub(2)
                    .map(|i| increments[i + 1] >= increments[i])
                    .unwrap_or(false);
                if growing {
                    return Err(EngineFailure::Divergence {
                        detail: format!(
                            "increments still growing after {iterations} iterations"
                        ),
                    });
                }
                return Err(EngineFailure::IterationLimit(max_iter));
            }
            iterations += 1;
            let next = sys.sweep(&u);
            let diff: Vec<f64> = next.iter().zip(u.iter()).map(|(b, a)| b - a).collect();
            let dv = weighted_sup(&diff, &sys.base);
            let sup_ratio = weighted_sup(&next, &sys.base);
            trace.push(next.clone());
            increments.push(dv);
            if sup_ratio > DIVERGENCE_CAP {
                return Err(EngineFailure::Divergence {
                    detail: format!(
                        "iterates exceeded {DIVERGENCE_CAP:.1e} times the reference weight"
                    ),
                });
            }
            let stall_floor = 8.0 * f64::EPSILON * sup_ratio.max(1.0);
            if increments.len() > SHRINK_WINDOW {
                let old = increments[increments.len() - 1 - SHRINK_WINDOW];
                if dv >= old && dv > 4.0 * stall_floor {
                    return Err(EngineFailure::Divergence {
                        detail: format!(
                            "increments failed to shrink over {SHRINK_WINDOW} iterations \
                             (now {dv:.3e}, before {old:.3e})"
                        ),
                    });
                }
            }
            if increments.len() >= 2 {
                let prev = increments[increments.len() - 2];
                if prev > 0.0 {
                    if ratio_window.len() == RATIO_WINDOW {
                        ratio_window.pop_front();
                    }
                    ratio_window.push_back(dv / prev);
                }
            }
            u = next;
            last_dv = dv;
            if iterations < 2 {
                continue;
            }
            if dv == 0.0 || dv <= stall_floor {
                break;
            }
            let r_hat = ratio_window
                .iter()
                .fold(0.0_f64, |a, r| a.max(*r))
                .clamp(1e-9, 0.999_999_5);
            let threshold = 0.25 * shrink * tol * (1.0 - r_hat) / r_hat;
            if dv < threshold {
                break;
            }
        }

        // Inflate the last iterate into a supersolution of the occupation
        // inequality: mu = (1 + eps) u with eps ~ delta (S - 1), then verify
        // and bump eps if float rounding still leaves a negative slack.
        let sup_ratio = weighted_sup(&u, &sys.base).max(1.0);
        let delta = last_dv;
        let g = delta * (sup_ratio - 1.0).max(0.0);
        if g >= 0.5 {
            shrink *= 0.25;
            continue;
        }
        let mut eps = g / (1.0 - g);
        let (weight, residual) = loop {
            let mu: Vec<f64> = u.iter().map(|v| v * (1.0 + eps)).collect();
            let smu = sys.sweep(&mu);
            let mut worst = 0.0_f64;
            let mut defect = 0.0_f64;
            for i in 0..n {
                let slack = mu[i] - smu[i];
                worst = worst.min(slack);
                defect = defect.max(slack.abs() / sys.base[i]);
            }
            if worst >= 0.0 {
                break (mu, defect);
            }
            eps = 2.0 * eps + 16.0 * f64::EPSILON * sup_ratio;
        };
        if residual <= tol {
            return Ok(EngineOutput {
                sup_ratio: weighted_sup(&weight, &sys.base).max(1.0),
                weight,
                iterations,
                residual,
                trace,
            });
        }
        let stall_floor = 8.0 * f64::EPSILON * sup_ratio;
        if delta <= stall_floor {
            return Err(EngineFailure::ToleranceTooTight { achieved: residual });
        }
        shrink *= 0.25;
    }
}

fn check_inputs(m: &FiniteMdp, tol: f64) -> Result<(), BoundError> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(BoundError::BadTolerance);
    }
    let report = validate_model(m);
    if !report.is_valid() {
        return Err(BoundError::InvalidModel(
            report
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    Ok(())
}

/// Certifies transience by computing the occupation-bound weight μ: the
/// fixed point of `u ↦ max_a [V + Σ u q]`, equal to the per-state supremum
/// of `Σ_n Q_φ^n V` over stationary policies.
///
/// On success the report carries `k_hat = (1 + tol) · sup μ/V`, and μ
/// satisfies the occupation inequality exactly (up to float rounding), so it
/// can be fed to the reductions without renormalization surprises.
pub fn compute_mu(
    m: &FiniteMdp,
    v: &WeightFunction,
    tol: f64,
    max_iter: usize,
) -> Result<BoundReport, BoundError> {
    check_inputs(m, tol)?;
    let n = m.n_states();
    if v.len() != n {
        return Err(BoundError::Dimension(format!(
            "weight length {} vs {} states",
            v.len(),
            n
        )));
    }
    let sys = SweepSystem {
        base: v.values().to_vec(),
        rows: (0..n)
            .map(|x| {
                (0..m.n_actions(x))
                    .map(|a| m.kernel_row(x, a).to_vec())
                    .collect()
            })
            .collect(),
    };
    let out = run_weight_iteration(&sys, tol, max_iter).map_err(|e| match e {
        EngineFailure::Divergence { detail } => BoundError::TransienceViolated { detail },
        EngineFailure::IterationLimit(l) => BoundError::IterationLimit(l),
        EngineFailure::ToleranceTooTight { achieved } => {
            BoundError::ToleranceTooTight { achieved }
        }
    })?;
    let weight = WeightFunction::new(out.weight, WeightRole::Occupation)?;
    Ok(BoundReport {
        k_hat: (1.0 + tol) * out.sup_ratio,
        sup_weight_ratio: out.sup_ratio,
        k_hat_excluding_marked: None,
        iterations: out.iterations,
        residual: out.residual,
        certified: out.residual <= tol,
        trace: IterationTrace {
            states: (0..n).collect(),
            iterates: out.trace,
        },
        weight,
        tol,
    })
}

/// Certifies the hitting-time bound for a marked state: runs the occupation
/// iteration with unit weights on the taboo kernel (mass into `ell` deleted)
/// over the other states, then extends to `ell` by one application of the
/// taboo operator there. The result bounds the expected number of epochs
/// before the system hits `ell`, uniformly over stationary policies.
pub fn compute_mu_ell(
    m: &FiniteMdp,
    ell: usize,
    tol: f64,
    max_iter: usize,
) -> Result<BoundReport, BoundError> {
    check_inputs(m, tol)?;
    let n = m.n_states();
    if ell >= n {
        return Err(BoundError::NoSuchState(ell));
    }
    let active: Vec<usize> = (0..n).filter(|&x| x != ell).collect();
    let mut compact = vec![usize::MAX; n];
    for (i, &x) in active.iter().enumerate() {
        compact[x] = i;
    }
    let sys = SweepSystem {
        base: vec![1.0; active.len()],
        rows: active
            .iter()
            .map(|&x| {
                (0..m.n_actions(x))
                    .map(|a| {
                        m.kernel_row(x, a)
                            .iter()
                            .filter(|&&(t, _)| t != ell)
                            .map(|&(t, mass)| (compact[t], mass))
                            .collect()
                    })
                    .collect()
            })
            .collect(),
    };
    let out = run_weight_iteration(&sys, tol, max_iter).map_err(|e| match e {
        EngineFailure::Divergence { detail } => BoundError::HittingViolated { ell, detail },
        EngineFailure::IterationLimit(l) => BoundError::IterationLimit(l),
        EngineFailure::ToleranceTooTight { achieved } => {
            BoundError::ToleranceTooTight { achieved }
        }
    })?;

    // Extend to the marked state by one taboo application; the extension
    // attains the taboo inequality there with equality at the best action.
    let mut values = vec![0.0_f64; n];
    for (i, &x) in active.iter().enumerate() {
        values[x] = out.weight[i];
    }
    let mut at_ell = f64::NEG_INFINITY;
    for a in 0..m.n_actions(ell) {
        let val = 1.0 + weighted_row_sum(m.kernel_row(ell, a), &values, Some(ell));
        if val > at_ell {
            at_ell = val;
        }
    }
    values[ell] = at_ell;

    let sup_all = values.iter().fold(1.0_f64, |a, v| a.max(*v));
    let weight = WeightFunction::new(values, WeightRole::TabooOccupation { ell })?;
    Ok(BoundReport {
        k_hat: (1.0 + tol) * sup_all,
        sup_weight_ratio: sup_all,
        k_hat_excluding_marked: Some((1.0 + tol) * out.sup_ratio),
        iterations: out.iterations,
        residual: out.residual,
        certified: out.residual <= tol,
        trace: IterationTrace {
            states: active,
            iterates: out.trace,
        },
        weight,
        tol,
    })
}

/// Outcome of an assumption check against a user-supplied constant.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub holds: bool,
    pub supplied_bound: f64,
    /// The certified `sup_x weight(x)/V(x)` the supplied bound is tested
    /// against.
    pub sup_ratio: f64,
    pub report: BoundReport,
}

/// Certifies that weighted occupation sums are bounded by `k · V` over all
/// stationary policies: computes μ and tests `sup μ/V ≤ k`.
pub fn check_assumption_t(
    m: &FiniteMdp,
    v: &WeightFunction,
    k: f64,
    tol: f64,
    max_iter: usize,
) -> Result<AssumptionCheck, BoundError> {
    let report = compute_mu(m, v, tol, max_iter)?;
    Ok(AssumptionCheck {
        holds: report.certified && report.sup_weight_ratio <= k,
        supplied_bound: k,
        sup_ratio: report.sup_weight_ratio,
        report,
    })
}

/// Certifies that expected epochs before hitting `ell` are bounded by
/// `k_ell` over all stationary policies and start states.
pub fn check_assumption_ht(
    m: &FiniteMdp,
    ell: usize,
    k_ell: f64,
    tol: f64,
    max_iter: usize,
) -> Result<AssumptionCheck, BoundError> {
    let report = compute_mu_ell(m, ell, tol, max_iter)?;
    Ok(AssumptionCheck {
        holds: report.certified && report.sup_weight_ratio <= k_ell,
        supplied_bound: k_ell,
        sup_ratio: report.sup_weight_ratio,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{FiniteMdp, ValueVector};
    use crate::models::{build_remark1_mdp, ell_star, Remark1Spec};
    use crate::oracle::enumerate_policies;
    use crate::testing::fix_a;

    const TOL: f64 = 1e-10;
    const MAX_ITER: usize = 200_000;

    fn ones(n: usize) -> WeightFunction {
        WeightFunction::ones(n)
    }

    #[test]
    fn v_norm_examples() {
        let v = ones(2);
        assert_eq!(v_norm(&[0.0, 0.0], &v), 0.0);
        let w = WeightFunction::new(vec![2.0, 3.0], WeightRole::Reference).unwrap();
        assert_eq!(v_norm(&[2.0, 3.0], &w), 1.0);
        let f = ValueVector::from(vec![8.0 / 3.0, 10.0 / 3.0]);
        assert!((v_norm(&f, &v) - 10.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn compute_mu_fix_a_golden() {
        // mu(s1) = 1 + 0.4 mu(s1) and mu(s0) = 1 + 0.5 mu(s1), by hand.
        let m = fix_a();
        let report = compute_mu(&m, &ones(2), TOL, MAX_ITER).unwrap();
        assert!(report.certified);
        assert!((report.weight.value(0) - 11.0 / 6.0).abs() < 1e-8);
        assert!((report.weight.value(1) - 5.0 / 3.0).abs() < 1e-8);
        assert!((report.k_hat - 11.0 / 6.0).abs() < 1e-6);
        assert!(report.residual <= TOL);
    }

    #[test]
    fn compute_mu_empty_kernel_returns_v() {
        let m = FiniteMdp::new(
            vec!["s0".into(), "s1".into()],
            vec![vec!["a".into()], vec!["a".into()]],
            vec![vec![vec![]], vec![vec![]]],
            vec![vec![1.0], vec![1.0]],
        )
        .unwrap();
        let v = WeightFunction::new(vec![2.0, 7.0], WeightRole::Reference).unwrap();
        let report = compute_mu(&m, &v, TOL, MAX_ITER).unwrap();
        assert_eq!(report.weight.value(0), 2.0);
        assert_eq!(report.weight.value(1), 7.0);
        assert!((report.k_hat - 1.0).abs() < 1e-9);
    }

    #[test]
    fn compute_mu_diverges_on_recurrent_self_loop() {
        let m = FiniteMdp::new(
            vec!["s".into()],
            vec![vec!["a".into()]],
            vec![vec![vec![(0, 1.0)]]],
            vec![vec![1.0]],
        )
        .unwrap();
        let err = compute_mu(&m, &ones(1), TOL, MAX_ITER).unwrap_err();
        assert!(err.to_string().contains("Assumption T appears violated"));
    }

    #[test]
    fn check_t_fix_a_thresholds() {
        let m = fix_a();
        let check = check_assumption_t(&m, &ones(2), 2.0, TOL, MAX_ITER).unwrap();
        assert!(check.holds, "11/6 <= 2 must hold");
        let check = check_assumption_t(&m, &ones(2), 1.5, TOL, MAX_ITER).unwrap();
        assert!(!check.holds, "11/6 > 1.5 must fail");
    }

    #[test]
    fn check_t_empty_kernel_holds_at_one() {
        let m = FiniteMdp::new(
            vec!["s".into()],
            vec![vec!["a".into()]],
            vec![vec![vec![]]],
            vec![vec![0.0]],
        )
        .unwrap();
        let check = check_assumption_t(&m, &ones(1), 1.0, TOL, MAX_ITER).unwrap();
        assert!(check.holds);
    }

    #[test]
    fn mu_ell_remark1_closed_forms() {
        let spec = Remark1Spec::new(vec![0.2, 0.4, 0.6]).unwrap();
        let m = build_remark1_mdp(&spec);
        let ell = m.n_states() - 1;
        let report = compute_mu_ell(&m, ell, 1e-12, MAX_ITER).unwrap();
        assert!(report.certified);
        let mu = &report.weight;
        assert!((mu.value(0) - 1.0).abs() < 1e-10);
        for (i, &x) in [0.2, 0.4, 0.6].iter().enumerate() {
            assert!(
                (mu.value(i + 1) - 1.0 / (1.0 - x)).abs() < 1e-10,
                "interior point {x}"
            );
        }
        // mu at 0.4 is 1/0.6.
        assert!((mu.value(2) - 1.0 / 0.6).abs() < 1e-10);
        let golden_ell = (5.0_f64.sqrt() + 1.0) / 2.0;
        assert!((mu.value(ell) - golden_ell).abs() < 1e-10);
        assert!(report.k_hat_excluding_marked.is_some());
    }

    #[test]
    fn mu_ell_all_mass_to_ell() {
        // Every row sends all mass to ell, so the taboo kernel vanishes.
        let m = FiniteMdp::new(
            vec!["l".into(), "s".into()],
            vec![vec!["a".into()], vec!["a".into()]],
            vec![vec![vec![(0, 1.0)]], vec![vec![(0, 1.0)]]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap();
        let report = compute_mu_ell(&m, 0, TOL, MAX_ITER).unwrap();
        assert_eq!(report.weight.value(1), 1.0);
        assert_eq!(report.weight.value(0), 1.0);
    }

    #[test]
    fn check_ht_remark1_thresholds() {
        let spec = Remark1Spec::new(vec![0.2, 0.4, 0.6]).unwrap();
        let m = build_remark1_mdp(&spec);
        let ell = m.n_states() - 1;
        let bound = (5.0_f64.sqrt() + 3.0) / 2.0;
        let check = check_assumption_ht(&m, ell, bound, 1e-12, MAX_ITER).unwrap();
        assert!(check.holds, "sup mu_ell = 2.5 <= (sqrt5+3)/2 = 2.618...");
        let check = check_assumption_ht(&m, ell, 1.5, 1e-12, MAX_ITER).unwrap();
        assert!(!check.holds, "sup mu_ell = 2.5 at grid point 0.6 exceeds 1.5");
        assert!((check.sup_ratio - 2.5).abs() < 1e-9);
    }

    #[test]
    fn contraction_fix_a_ratios_within_bound() {
        let m = fix_a();
        let report = compute_mu(&m, &ones(2), TOL, MAX_ITER).unwrap();
        let cert = report.contraction_certificate(1e-9).unwrap();
        assert!(cert.certified, "max ratio {} bound {}", cert.max_ratio, cert.bound);
        // (K-1)/K with K = 11/6 is 5/11.
        assert!(cert.bound >= 5.0 / 11.0);
        assert!(cert.max_ratio <= 5.0 / 11.0 + 1e-9);
        assert!(cert.ratios_evaluated >= 3);
    }

    #[test]
    fn contraction_one_step_convergence_has_zero_ratios() {
        let m = FiniteMdp::new(
            vec!["s".into()],
            vec![vec!["a".into()]],
            vec![vec![vec![]]],
            vec![vec![0.0]],
        )
        .unwrap();
        let report = compute_mu(&m, &ones(1), TOL, MAX_ITER).unwrap();
        let cert = report.contraction_certificate(1e-9).unwrap();
        assert!(cert.certified);
        assert_eq!(cert.max_ratio, 0.0);
    }

    #[test]
    fn contraction_remark1_taboo_run() {
        let spec = Remark1Spec::new(vec![0.2, 0.4, 0.6]).unwrap();
        let m = build_remark1_mdp(&spec);
        let ell = m.n_states() - 1;
        let report = compute_mu_ell(&m, ell, 1e-12, MAX_ITER).unwrap();
        let cert = report.contraction_certificate(1e-9).unwrap();
        assert!(cert.certified, "max ratio {} bound {}", cert.max_ratio, cert.bound);
        assert!(cert.max_ratio <= 1.0 - 1.0 / report.k_hat + 1e-9);
    }

    #[test]
    fn trace_too_short_is_an_error() {
        let trace = IterationTrace {
            states: vec![0],
            iterates: vec![vec![0.0], vec![1.0]],
        };
        let err = contraction_diagnostics(&trace, &ones(1), 2.0, 1e-9).unwrap_err();
        assert!(matches!(err, BoundError::TraceTooShort(2)));
    }

    // Independent oracle: mu must equal the per-state maximum over all
    // policies of the exact occupation sums (I - Q_phi)^{-1} V, and dominate
    // truncated power sums.
    #[test]
    fn mu_matches_policy_enumeration_oracle() {
        for seed in [1u64, 7, 23, 40, 77] {
            let m = crate::testing::gen_transient_mdp(seed);
            let n = m.n_states();
            let v = ones(n);
            let report = compute_mu(&m, &v, 1e-12, MAX_ITER).unwrap();
            let mut best = vec![f64::NEG_INFINITY; n];
            for policy in enumerate_policies(&m, 1_000_000).unwrap() {
                let rows: Vec<&[(usize, f64)]> =
                    (0..n).map(|x| m.kernel_row(x, policy.action(x))).collect();
                let occ = crate::linalg::solve_i_minus(&rows, v.values()).unwrap();
                for (b, o) in best.iter_mut().zip(occ.iter()) {
                    *b = b.max(*o);
                }
            }
            for (x, oracle) in best.iter().enumerate() {
                assert!(
                    (report.weight.value(x) - oracle).abs() < 1e-8,
                    "seed {seed} state {x}: mu {} vs oracle {oracle}",
                    report.weight.value(x)
                );
            }
        }
    }

    #[test]
    fn mu_dominates_truncated_power_sums() {
        let m = crate::testing::gen_transient_mdp(11);
        let n = m.n_states();
        let v = ones(n);
        let report = compute_mu(&m, &v, 1e-12, MAX_ITER).unwrap();
        for policy in enumerate_policies(&m, 1_000_000).unwrap() {
            let mut total = vec![0.0_f64; n];
            let mut term: Vec<f64> = v.values().to_vec();
            for _ in 0..400 {
                for (t, inc) in total.iter_mut().zip(term.iter()) {
                    *t += inc;
                }
                let next: Vec<f64> = (0..n)
                    .map(|x| {
                        weighted_row_sum(m.kernel_row(x, policy.action(x)), &term, None)
                    })
                    .collect();
                term = next;
            }
            for (x, t) in total.iter().enumerate() {
                assert!(
                    *t <= report.weight.value(x) + 1e-8,
                    "truncated sum exceeds mu at state {x}"
                );
            }
        }
    }

    #[test]
    fn mu_ell_matches_taboo_enumeration_oracle() {
        for seed in [3u64, 19, 61] {
            let (m, ell, _) = crate::testing::gen_restart_mdp(seed);
            let n = m.n_states();
            let report = compute_mu_ell(&m, ell, 1e-12, MAX_ITER).unwrap();
            let mut best = vec![f64::NEG_INFINITY; n];
            for policy in enumerate_policies(&m, 1_000_000).unwrap() {
                let taboo: Vec<Vec<(usize, f64)>> = (0..n)
                    .map(|x| {
                        m.kernel_row(x, policy.action(x))
                            .iter()
                            .copied()
                            .filter(|&(t, _)| t != ell)
                            .collect()
                    })
                    .collect();
                let rows: Vec<&[(usize, f64)]> = taboo.iter().map(|r| r.as_slice()).collect();
                let ones_rhs = vec![1.0; n];
                let hits = crate::linalg::solve_i_minus(&rows, &ones_rhs).unwrap();
                for (b, h) in best.iter_mut().zip(hits.iter()) {
                    *b = b.max(*h);
                }
            }
            for (x, oracle) in best.iter().enumerate() {
                assert!(
                    (report.weight.value(x) - oracle).abs() < 1e-8,
                    "seed {seed} state {x}: mu_ell {} vs oracle {oracle}",
                    report.weight.value(x)
                );
            }
        }
    }

    #[test]
    fn remark1_discontinuity_gap_near_ell() {
        // A grid point just below the endpoint has weight near 1/(1-ell*),
        // well above the weight at the endpoint itself.
        let x = ell_star() - 1e-3;
        let spec = Remark1Spec::new(vec![0.3, x]).unwrap();
        let m = build_remark1_mdp(&spec);
        let ell = m.n_states() - 1;
        let report = compute_mu_ell(&m, ell, 1e-12, MAX_ITER).unwrap();
        let gap = report.weight.value(2) - report.weight.value(ell);
        assert!(gap >= 0.9, "gap {gap}");
    }
}
