//! Deterministic fixtures and seeded instance generators shared by the test
//! suites. Everything here is a pure function of its arguments; the random
//! generators derive their entire stream from the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mdp::FiniteMdp;
use crate::models::InventorySpec;

/// Two-state transient chain: `s0 --0.5--> s1`, `s1 --0.4--> s1`, costs 1
/// and 2. Exact total cost under its single policy is `(8/3, 10/3)` and the
/// occupation weight with unit reference is `(11/6, 5/3)`.
pub fn fix_a() -> FiniteMdp {
    FiniteMdp::new(
        vec!["s0".into(), "s1".into()],
        vec![vec!["a0".into()], vec!["a0".into()]],
        vec![vec![vec![(1, 0.5)]], vec![vec![(1, 0.4)]]],
        vec![vec![1.0], vec![2.0]],
    )
    .expect("fixture is structurally sound")
}

/// Inventory fixture: capacity 4, max order 2, unit grid, demand pmf
/// `{0: .3, 1: .3, 2: .2, 3: .2}`, fixed cost 5, unit cost 1, holding
/// `0.5·x`. Six states and three actions everywhere, so 729 policies.
pub fn fix_inv_spec() -> InventorySpec {
    InventorySpec {
        capacity: 4.0,
        max_order: 2.0,
        grid_step: 1.0,
        demand_pmf: vec![(0.0, 0.3), (1.0, 0.3), (2.0, 0.2), (3.0, 0.2)],
        fixed_cost: 5.0,
        unit_cost: 1.0,
        holding: vec![0.0, 0.5, 1.0, 1.5, 2.0],
    }
}

/// The interior grid `{0.1, …, 0.6} ∪ {ℓ* − 10⁻³}` used to exhibit both the
/// closed-form weights and the jump at the endpoint.
pub fn remark1_dense_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=6).map(|i| i as f64 / 10.0).collect();
    grid.push(crate::models::ell_star() - 1e-3);
    grid
}

/// Random sub-stochastic instance with at most 6 states and 3 actions per
/// state. Row masses stay at or below 0.95, so occupation sums are bounded
/// by 20 under every policy and transience certification always succeeds
/// with the unit reference weight.
pub fn gen_transient_mdp(seed: u64) -> FiniteMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut actions = Vec::with_capacity(n);
    let mut kernel = Vec::with_capacity(n);
    let mut cost = Vec::with_capacity(n);
    for _ in 0..n {
        let n_a = rng.gen_range(1..=3);
        actions.push((0..n_a).map(|a| format!("a{a}")).collect::<Vec<_>>());
        let mut k_rows = Vec::with_capacity(n_a);
        let mut c_row = Vec::with_capacity(n_a);
        for _ in 0..n_a {
            if rng.gen_bool(0.1) {
                k_rows.push(vec![]); // terminating row
            } else {
                let n_targets = rng.gen_range(1..=n);
                let mut raw: Vec<f64> = (0..n_targets).map(|_| rng.gen_range(0.05..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let mass = rng.gen_range(0.05..0.95);
                for w in raw.iter_mut() {
                    *w *= mass / total;
                }
                let mut row: Vec<(usize, f64)> = raw
                    .into_iter()
                    .map(|w| (rng.gen_range(0..n), w))
                    .collect();
                row.sort_by_key(|&(t, _)| t);
                k_rows.push(row);
            }
            c_row.push(if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..10.0) });
        }
        kernel.push(k_rows);
        cost.push(c_row);
    }
    FiniteMdp::new(states, actions, kernel, cost).expect("generated model is structurally sound")
}

/// Random row-stochastic instance whose every row mixes at least 15% of its
/// mass into state 0, so the expected time to hit state 0 is bounded by 1/γ
/// under every policy. Returns the model, the marked state, and the minimum
/// mixing weight actually used.
pub fn gen_restart_mdp(seed: u64) -> (FiniteMdp, usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut actions = Vec::with_capacity(n);
    let mut kernel = Vec::with_capacity(n);
    let mut cost = Vec::with_capacity(n);
    let mut min_mix = 1.0_f64;
    for _ in 0..n {
        let n_a = rng.gen_range(1..=3);
        actions.push((0..n_a).map(|a| format!("a{a}")).collect::<Vec<_>>());
        let mut k_rows = Vec::with_capacity(n_a);
        let mut c_row = Vec::with_capacity(n_a);
        for _ in 0..n_a {
            let mix = rng.gen_range(0.15..0.6);
            min_mix = min_mix.min(mix);
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0_f64).max(1e-3)).collect();
            let total: f64 = raw.iter().sum();
            let mut row: Vec<(usize, f64)> = raw
                .iter()
                .enumerate()
                .map(|(t, w)| (t, (1.0 - mix) * w / total))
                .collect();
            row[0].1 += mix;
            k_rows.push(row);
            c_row.push(rng.gen_range(0.0..10.0));
        }
        kernel.push(k_rows);
        cost.push(c_row);
    }
    let m = FiniteMdp::new(states, actions, kernel, cost)
        .expect("generated model is structurally sound");
    (m, 0, min_mix)
}
