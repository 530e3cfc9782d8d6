//! Acceptance suite. One test per criterion (criteria 4 and 7 are split into
//! their independent sub-checks); each prints a `[criterion N] PASS/FAIL`
//! line with the measured quantities.
//!
//! Two sub-checks are expected to fail and are kept failing deliberately:
//! `c4b_inventory_weight_under_closed_form_bound` and
//! `c7a_lost_sale_certified_by_closed_form_bound`. Both assert that the
//! closed-form constant `(⌈C/M⌉+1)/γ^(⌈C/M⌉+1) = 375` dominates the
//! certified weight of the inventory fixture. It does not: with always-max
//! orders the stock drains by one grid step per high-demand period, so from
//! full capacity five (not three) consecutive high demands are needed to
//! force a lost sale, and the certified supremum is 1221.25 — hand-checkable
//! from the linear system of the always-order-2 policy and confirmed below
//! by the exhaustive 729-policy oracle. The assertions are implemented
//! exactly as stated and fail honestly rather than being loosened.

use std::time::Instant;

use undiscount::testing::{fix_a, fix_inv_spec, gen_restart_mdp, gen_transient_mdp, remark1_dense_grid};
use undiscount::*;

const RANDOM_SUITE_SIZE: u64 = 100;

/// Exact per-policy expected hitting sums, used as the independent oracle
/// for the certified weights on the inventory fixture.
fn exact_taboo_hitting_maximum(m: &FiniteMdp, ell: usize) -> Vec<f64> {
    let n = m.n_states();
    let mut best = vec![f64::NEG_INFINITY; n];
    for policy in enumerate_policies(m, 1_000_000).unwrap() {
        let taboo: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|x| {
                m.kernel_row(x, policy.action(x))
                    .iter()
                    .copied()
                    .filter(|&(t, _)| t != ell)
                    .collect()
            })
            .collect();
        // Expected epochs satisfy T = 1 + (taboo kernel) T; evaluate it as
        // the total cost of unit costs on the taboo model.
        let states = m.state_labels().to_vec();
        let actions = vec![vec!["a".to_string()]; n];
        let kernel = taboo.into_iter().map(|row| vec![row]).collect();
        let cost = vec![vec![1.0]; n];
        let taboo_model = FiniteMdp::new(states, actions, kernel, cost).unwrap();
        let single = StationaryPolicy::new(vec![0; n], &taboo_model).unwrap();
        let t = policy_total_cost(&taboo_model, &single).unwrap();
        for x in 0..n {
            best[x] = best[x].max(t[x]);
        }
    }
    best
}

#[test]
fn c1_remark1_golden_values() {
    let started = Instant::now();
    let spec = Remark1Spec::new(remark1_dense_grid()).unwrap();
    let m = build_remark1_mdp(&spec);
    let ell = m.n_states() - 1;
    let report = compute_mu_ell(&m, ell, 1e-12, 200_000).unwrap();
    let mu = &report.weight;

    let err_origin = (mu.value(0) - 1.0).abs();
    assert!(err_origin <= 1e-10, "weight at 0: error {err_origin:.3e}");

    let golden_endpoint = (5.0_f64.sqrt() + 1.0) / 2.0;
    let err_endpoint = (mu.value(ell) - golden_endpoint).abs();
    assert!(err_endpoint <= 1e-10, "weight at endpoint: error {err_endpoint:.3e}");

    let mut worst_interior = 0.0_f64;
    for (i, &x) in spec.interior_grid().iter().enumerate() {
        let err = (mu.value(i + 1) - 1.0 / (1.0 - x)).abs();
        worst_interior = worst_interior.max(err);
        assert!(err <= 1e-10, "closed form 1/(1-x) at {x}: error {err:.3e}");
    }

    // The grid point a hair below the endpoint sits near the limit
    // (sqrt(5)+3)/2 while the endpoint itself is at (sqrt(5)+1)/2.
    let near = spec.interior_grid().len(); // last interior point, index n-2
    let gap = mu.value(near) - mu.value(ell);
    assert!(gap >= 0.9, "jump at the marked state: gap {gap}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?} exceeds 1 s");
    println!(
        "[criterion 1] PASS origin err {err_origin:.2e}, endpoint err {err_endpoint:.2e}, \
         worst interior err {worst_interior:.2e}, jump gap {gap:.6}, runtime {elapsed:?}"
    );
}

#[test]
fn c2_hv_total_cost_equivalence_random_suite() {
    let started = Instant::now();
    let mut worst_gap = 0.0_f64;
    let mut worst_tcoe = 0.0_f64;
    for seed in 0..RANDOM_SUITE_SIZE {
        let m = gen_transient_mdp(seed);
        let v = WeightFunction::ones(m.n_states());
        // Row masses are capped at 0.95 by construction, so occupation sums
        // are bounded by 20 under every policy.
        let check = check_assumption_t(&m, &v, 20.0, 1e-11, 200_000).unwrap();
        assert!(check.holds, "seed {seed}: transience certification failed");
        let report = check.report;
        let dp = hv_transform(&m, &report.weight, report.min_admissible_beta()).unwrap();
        let solved = value_iteration(&dp, 1e-11, 2_000_000).unwrap();
        assert!(solved.converged);
        let lifted = lift_total_value(&dp, &solved.value).unwrap();

        let oracle =
            brute_force_optimum(&m, OracleCriterion::TotalCost, 1_000_000, false).unwrap();
        let gap = lifted.sup_distance(oracle.best_total.as_ref().unwrap());
        assert!(gap <= 1e-7, "seed {seed}: lifted value vs oracle gap {gap:.3e}");
        worst_gap = worst_gap.max(gap);

        let residual = tcoe_residual(&m, &lifted);
        assert!(residual <= 1e-8, "seed {seed}: total-cost residual {residual:.3e}");
        worst_tcoe = worst_tcoe.max(residual);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?} exceeds 30 s");
    println!(
        "[criterion 2] PASS {RANDOM_SUITE_SIZE} instances, worst value gap {worst_gap:.2e} \
         (<= 1e-7), worst residual {worst_tcoe:.2e} (<= 1e-8), runtime {elapsed:?}"
    );
}

#[test]
fn c3_hvag_average_cost_equivalence_random_suite() {
    let started = Instant::now();
    let mut worst_gap = 0.0_f64;
    let mut worst_acoe = 0.0_f64;
    for seed in 0..RANDOM_SUITE_SIZE {
        let (m, ell, min_mix) = gen_restart_mdp(seed);
        // Every row mixes at least min_mix into the marked state, so
        // hitting times are bounded by 1/min_mix.
        let check = check_assumption_ht(&m, ell, 1.0 / min_mix + 1.0, 1e-11, 200_000).unwrap();
        assert!(check.holds, "seed {seed}: hitting certification failed");
        let report = check.report;
        let dp = hvag_transform(&m, ell, &report.weight, report.min_admissible_beta()).unwrap();
        let solved = value_iteration(&dp, 1e-11, 2_000_000).unwrap();
        assert!(solved.converged);
        let lifted = lift_average_solution(&dp, &solved.value).unwrap();
        assert_eq!(lifted.h[ell], 0.0, "seed {seed}: bias must vanish at the marked state");

        let oracle =
            brute_force_optimum(&m, OracleCriterion::AverageCost { ell }, 1_000_000, false)
                .unwrap();
        let gap = (lifted.w - oracle.best_average.unwrap()).abs();
        assert!(gap <= 1e-6, "seed {seed}: average cost vs oracle gap {gap:.3e}");
        worst_gap = worst_gap.max(gap);

        let residual = acoe_residual(&m, lifted.w, &lifted.h).unwrap();
        assert!(residual <= 1e-8, "seed {seed}: average-cost residual {residual:.3e}");
        worst_acoe = worst_acoe.max(residual);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?} exceeds 60 s");
    println!(
        "[criterion 3] PASS {RANDOM_SUITE_SIZE} instances, worst average gap {worst_gap:.2e} \
         (<= 1e-6), worst residual {worst_acoe:.2e} (<= 1e-8), runtime {elapsed:?}"
    );
}

#[test]
fn c4a_inventory_demand_tail_and_closed_form_constant() {
    let spec = fix_inv_spec();
    let (holds, gamma) = check_assumption_d(&spec).unwrap();
    assert!(holds);
    assert!((gamma - 0.2).abs() <= 1e-12, "gamma {gamma}");
    let bound = k_ell_bound(&spec).unwrap();
    assert!((bound - 375.0).abs() <= 1e-9, "closed-form constant {bound}");
    println!("[criterion 4a] PASS gamma {gamma}, closed-form constant {bound}");
}

#[test]
fn c4b_inventory_weight_under_closed_form_bound() {
    // Stated check: the certified weight supremum is at most the closed-form
    // constant 375. Measured: 1221.25, a genuine counterexample to the
    // constant (see the module doc above); the exhaustive oracle agrees with
    // the certified value, so the assertion below fails and is meant to.
    let spec = fix_inv_spec();
    let m = build_inventory_mdp(&spec).unwrap();
    let ell = lost_sale_state(&spec);
    let report = compute_mu_ell(&m, ell, 1e-8, 500_000).unwrap();
    assert!(report.certified);

    let oracle_max = exact_taboo_hitting_maximum(&m, ell)
        .into_iter()
        .fold(0.0_f64, f64::max);
    let agreement = (report.sup_weight_ratio - oracle_max).abs();
    assert!(
        agreement <= 1e-4 * oracle_max,
        "certified weight and exhaustive oracle disagree: {} vs {oracle_max}",
        report.sup_weight_ratio
    );

    let bound = k_ell_bound(&spec).unwrap();
    let verdict = if report.sup_weight_ratio <= bound { "PASS" } else { "FAIL" };
    println!(
        "[criterion 4b] {verdict} sup weight {:.6} vs closed-form constant {bound:.6} \
         (oracle confirms {oracle_max:.6}; hand solve of the always-order-max policy gives \
         1221.25 exactly)",
        report.sup_weight_ratio
    );
    assert!(
        report.sup_weight_ratio <= bound,
        "certified supremum {} exceeds the closed-form constant {bound}; the constant is not \
         an upper bound for this demand profile",
        report.sup_weight_ratio
    );
}

#[test]
fn c4c_inventory_average_cost_matches_oracle() {
    let started = Instant::now();
    let spec = fix_inv_spec();
    let m = build_inventory_mdp(&spec).unwrap();
    let ell = lost_sale_state(&spec);
    let report = compute_mu_ell(&m, ell, 1e-8, 500_000).unwrap();
    assert!(report.certified);
    let dp = hvag_transform(&m, ell, &report.weight, report.min_admissible_beta()).unwrap();
    let solved = policy_iteration(&dp, 1e-10).unwrap();
    assert!(solved.converged);
    let lifted = lift_average_solution(&dp, &solved.value).unwrap();

    let oracle =
        brute_force_optimum(&m, OracleCriterion::AverageCost { ell }, 1_000_000, false).unwrap();
    assert_eq!(oracle.policies_enumerated, 729);
    let gap = (lifted.w - oracle.best_average.unwrap()).abs();
    assert!(gap <= 1e-6, "average cost vs 729-policy oracle: gap {gap:.3e}");

    let residual = acoe_residual(&m, lifted.w, &lifted.h).unwrap();
    assert!(residual <= 1e-8, "average-cost residual {residual:.3e}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0);
    println!(
        "[criterion 4c] PASS w {} vs oracle over 729 policies (gap {gap:.2e}), residual \
         {residual:.2e}, runtime {elapsed:?}; note the optimum is the never-order policy, \
         whose average cost is exactly zero because unmet demand carries no penalty",
        lifted.w
    );
}

#[test]
fn c4d_inventory_simulation_confirms_average_cost() {
    let started = Instant::now();
    let spec = fix_inv_spec();
    let m = build_inventory_mdp(&spec).unwrap();
    let ell = lost_sale_state(&spec);
    let report = compute_mu_ell(&m, ell, 1e-8, 500_000).unwrap();
    let dp = hvag_transform(&m, ell, &report.weight, report.min_admissible_beta()).unwrap();
    let solved = policy_iteration(&dp, 1e-10).unwrap();
    let lifted = lift_average_solution(&dp, &solved.value).unwrap();
    let policy = dp.restrict_policy(&solved.greedy_policy);

    let (mean, se) = simulate_policy(&m, &policy, 0, 100_000, 20, 20240809).unwrap();
    let deviation = (mean - lifted.w).abs();
    assert!(
        deviation <= 3.0 * se,
        "simulated mean {mean} deviates from w {} by {deviation:.3e} > 3 SE = {:.3e}",
        lifted.w,
        3.0 * se
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0);
    println!(
        "[criterion 4d] PASS simulated mean {mean} (SE {se:.2e}) within 3 SE of w {}, \
         horizon 1e5 x 20 replications, runtime {elapsed:?}",
        lifted.w
    );
}

#[test]
fn c5_transformed_rows_are_probability_rows_everywhere() {
    let mut rows_checked = 0usize;
    let mut betas_note = String::new();

    let mut check_dp = |dp: &DiscountedProblem| {
        assert!(dp.row_sum_max_defect <= 1e-12);
        for x in 0..dp.mdp.n_states() {
            for a in 0..dp.mdp.n_actions(x) {
                let mass = dp.mdp.row_mass(x, a);
                assert!(
                    (mass - 1.0).abs() <= 1e-12,
                    "row ({x},{a}) sums to {mass}"
                );
                assert!(dp.mdp.kernel_row(x, a).iter().all(|&(_, m)| m >= 0.0));
                rows_checked += 1;
            }
        }
    };

    // Transient fixtures and the random transient suite under the
    // total-cost rewrite.
    let mut hv_cases: Vec<FiniteMdp> = vec![fix_a()];
    hv_cases.push(build_lost_sale_total_cost_mdp(&fix_inv_spec()).unwrap());
    for seed in 0..RANDOM_SUITE_SIZE {
        hv_cases.push(gen_transient_mdp(seed));
    }
    for (i, m) in hv_cases.iter().enumerate() {
        let v = WeightFunction::ones(m.n_states());
        // 1e-8 is reachable in f64 even for the inventory fixture, whose
        // weights are of order 1e3.
        let report = compute_mu(m, &v, 1e-8, 500_000).unwrap();
        let min_beta = report.min_admissible_beta();
        for beta in [min_beta, 0.99] {
            if beta < min_beta {
                betas_note = format!(
                    "; for the lost-sale fixture 0.99 is below the admissible minimum \
                     {min_beta:.6} and only the minimum is testable"
                );
                continue;
            }
            check_dp(&hv_transform(m, &report.weight, beta).unwrap());
        }
        let _ = i;
    }

    // Stochastic fixtures and the random restart suite under the
    // average-cost rewrite.
    let remark1 = build_remark1_mdp(&Remark1Spec::new(remark1_dense_grid()).unwrap());
    let inventory = build_inventory_mdp(&fix_inv_spec()).unwrap();
    let mut hvag_cases: Vec<(FiniteMdp, usize)> = vec![
        (remark1.clone(), remark1.n_states() - 1),
        (inventory, lost_sale_state(&fix_inv_spec())),
    ];
    for seed in 0..RANDOM_SUITE_SIZE {
        let (m, ell, _) = gen_restart_mdp(seed);
        hvag_cases.push((m, ell));
    }
    for (m, ell) in &hvag_cases {
        let report = compute_mu_ell(m, *ell, 1e-8, 500_000).unwrap();
        let min_beta = report.min_admissible_beta();
        for beta in [min_beta, 0.99] {
            if beta < min_beta {
                betas_note = format!(
                    "; for the inventory fixture 0.99 is below the admissible minimum \
                     {min_beta:.6} and only the minimum is testable"
                );
                continue;
            }
            check_dp(&hvag_transform(m, *ell, &report.weight, beta).unwrap());
        }
    }
    println!(
        "[criterion 5] PASS {rows_checked} transformed rows sum to 1 within 1e-12 with \
         nonnegative entries, at the minimum admissible discount factor and at 0.99{betas_note}"
    );
}

#[test]
fn c6_contraction_certificates_on_every_run() {
    let slack = 1e-9;
    let mut runs = 0usize;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    let mut worst_margin = f64::INFINITY;

    let mut certify = |report: &BoundReport, label: &str| {
        let cert = report.contraction_certificate(slack).unwrap();
        assert!(
            cert.certified,
            "{label}: max ratio {} exceeds bound {}",
            cert.max_ratio, cert.bound
        );
        runs += 1;
        evaluated += cert.ratios_evaluated;
        skipped += cert.ratios_skipped;
        if cert.ratios_evaluated > 0 {
            worst_margin = worst_margin.min(cert.bound - cert.max_ratio);
        }
    };

    certify(&compute_mu(&fix_a(), &WeightFunction::ones(2), 1e-10, 200_000).unwrap(), "fix_a");
    for seed in 0..RANDOM_SUITE_SIZE {
        let m = gen_transient_mdp(seed);
        let v = WeightFunction::ones(m.n_states());
        certify(&compute_mu(&m, &v, 1e-11, 200_000).unwrap(), &format!("transient {seed}"));
    }
    for seed in 0..RANDOM_SUITE_SIZE {
        let (m, ell, _) = gen_restart_mdp(seed);
        certify(
            &compute_mu_ell(&m, ell, 1e-11, 200_000).unwrap(),
            &format!("restart {seed}"),
        );
    }
    let remark1 = build_remark1_mdp(&Remark1Spec::new(remark1_dense_grid()).unwrap());
    certify(
        &compute_mu_ell(&remark1, remark1.n_states() - 1, 1e-12, 200_000).unwrap(),
        "discontinuity chain",
    );
    let inventory = build_inventory_mdp(&fix_inv_spec()).unwrap();
    certify(
        &compute_mu_ell(&inventory, lost_sale_state(&fix_inv_spec()), 1e-8, 500_000).unwrap(),
        "inventory",
    );
    let lost = build_lost_sale_total_cost_mdp(&fix_inv_spec()).unwrap();
    certify(
        &compute_mu(&lost, &WeightFunction::ones(lost.n_states()), 1e-8, 500_000).unwrap(),
        "lost-sale inventory",
    );

    println!(
        "[criterion 6] PASS {runs} certification runs, {evaluated} increment ratios within \
         (k_hat-1)/k_hat + 1e-9 (worst margin {worst_margin:.2e}); {skipped} ratios at \
         rounding level excluded as indeterminate"
    );
}

#[test]
fn c7a_lost_sale_certified_by_closed_form_bound() {
    // Stated check: the lost-sale variant is certified transient with the
    // closed-form constant 375 as the bound. The certification itself
    // succeeds, but the certified supremum is 1221.25 (the same survival
    // system as criterion 4b), so the bound test fails and is meant to.
    let spec = fix_inv_spec();
    let m = build_lost_sale_total_cost_mdp(&spec).unwrap();
    let v = WeightFunction::ones(m.n_states());
    let check = check_assumption_t(&m, &v, 375.0, 1e-8, 500_000).unwrap();
    let verdict = if check.holds { "PASS" } else { "FAIL" };
    println!(
        "[criterion 7a] {verdict} transience certified with sup weight {:.6}; the stated \
         bound 375 is below it, so the check reports not-held (expected occupation before the \
         first lost sale genuinely reaches 1221.25 under the always-order-max policy)",
        check.sup_ratio
    );
    assert!(
        check.holds,
        "transience holds but not with constant 375: certified supremum is {}",
        check.sup_ratio
    );
}

#[test]
fn c7b_lost_sale_reduction_matches_total_cost_oracle() {
    let started = Instant::now();
    let spec = fix_inv_spec();
    let m = build_lost_sale_total_cost_mdp(&spec).unwrap();
    let v = WeightFunction::ones(m.n_states());
    let report = compute_mu(&m, &v, 1e-8, 500_000).unwrap();
    assert!(report.certified, "transience certification must succeed");

    let dp = hv_transform(&m, &report.weight, report.min_admissible_beta()).unwrap();
    let solved = policy_iteration(&dp, 1e-10).unwrap();
    assert!(solved.converged);
    let lifted = lift_total_value(&dp, &solved.value).unwrap();

    let residual = tcoe_residual(&m, &lifted);
    assert!(residual <= 1e-8, "total-cost residual {residual:.3e}");

    let oracle =
        brute_force_optimum(&m, OracleCriterion::TotalCost, 1_000_000, false).unwrap();
    assert_eq!(oracle.policies_enumerated, 729);
    let gap = lifted.sup_distance(oracle.best_total.as_ref().unwrap());
    assert!(gap <= 1e-7, "lifted value vs 729-policy oracle: gap {gap:.3e}");

    let elapsed = started.elapsed();
    println!(
        "[criterion 7b] PASS lost-sale reduction: residual {residual:.2e} (<= 1e-8), oracle \
         gap {gap:.2e} over 729 policies, certified k_hat {:.4}, runtime {elapsed:?}",
        report.k_hat
    );
}
