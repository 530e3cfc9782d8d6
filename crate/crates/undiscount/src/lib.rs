//! Reductions of undiscounted MDPs to discounted ones, with certificates.
//!
//! Finite MDPs here carry a nonnegative transition kernel whose rows are
//! finite measures, not necessarily probabilities. Two rewrites turn
//! undiscounted problems into ordinary discounted MDPs:
//!
//! - **Total cost**: when a weight μ certifies that weighted occupation sums
//!   are uniformly bounded over policies ([`bounding::compute_mu`]), the
//!   model rewrites into a discounted MDP with tilted kernel, scaled costs
//!   and an added absorbing state ([`transform::hv_transform`]); optimal
//!   values satisfy `v = μ · ṽ` and optimal policies coincide.
//! - **Average cost**: when the expected time to hit a marked state ℓ is
//!   uniformly bounded ([`bounding::compute_mu_ell`]), the rewrite
//!   ([`transform::hvag_transform`]) produces a discounted MDP whose value
//!   at ℓ is the optimal average cost, with bias `h = μ_ℓ · (v̄ − v̄(ℓ))`.
//!
//! [`solve`] provides value and policy iteration plus the residuals of the
//! discounted, total-cost, and average-cost optimality equations. [`oracle`]
//! enumerates stationary policies exhaustively on small instances and
//! evaluates them exactly, which is how every equivalence claim is verified.
//! [`models`] builds the two shipped model families (a chain whose
//! marked-state weight is discontinuous at the marked state, and a
//! capacitated lost-sales inventory model). Everything operates on finite
//! state and action sets; continuous models enter only through exact or
//! approximate discretization by the caller.
//!
//! All types are immutable after construction and every operation is a pure
//! function of its inputs, so the whole API is safe to use from concurrent
//! threads.

pub mod bounding;
mod linalg;
pub mod mdp;
pub mod models;
pub mod oracle;
pub mod solve;
pub mod testing;
pub mod transform;

pub use bounding::{
    check_assumption_ht, check_assumption_t, compute_mu, compute_mu_ell, contraction_diagnostics,
    v_norm, AssumptionCheck, BoundError, BoundReport, ContractionReport, WeightFunction,
    WeightRole,
};
pub use mdp::{
    apply_kernel, policy_total_cost, split_kernel, taboo_apply, validate_model, FiniteMdp,
    KernelSplit, ModelError, StationaryPolicy, ValidationReport, ValueVector, Violation,
};
pub use models::{
    build_inventory_mdp, build_lost_sale_total_cost_mdp, build_remark1_mdp, check_assumption_d,
    ell_star, k_ell_bound, lost_sale_state, simulate_policy, InventorySpec, ModelsError,
    Remark1Spec,
};
pub use oracle::{
    brute_force_optimum, enumerate_policies, exact_average_cost, exact_total_cost,
    OracleCriterion, OracleError, OracleResult,
};
pub use solve::{
    acoe_residual, dcoe_residual, policy_iteration, solve_discounted, tcoe_residual,
    value_iteration, SolveError, SolveReport,
};
pub use transform::{
    hv_transform, hvag_transform, lift_average_solution, lift_total_value, DiscountedProblem,
    LiftedAverageSolution, TransformError, TransformKind,
};
