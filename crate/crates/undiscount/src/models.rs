//! The two concrete model families shipped with the crate, plus a
//! Monte-Carlo policy simulator.
//!
//! The first family is a single-action chain on `{0} ∪ grid ∪ {ℓ*}` with
//! `ℓ* = (√5 − 1)/2`, built so the marked-state weight has the closed form
//! `μ_ℓ(x) = 1/(1 − x)` at interior points while `μ_ℓ(ℓ*) = (√5 + 1)/2`:
//! the weight jumps at the marked state even though the kernel moves
//! continuously. The second is a capacitated periodic-review inventory model
//! with fixed ordering costs and lost sales, whose lost-sale marker state
//! `0_L` is the natural marked state for the average-cost reduction.

use thiserror::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mdp::{FiniteMdp, ModelError, StationaryPolicy};

const PMF_TOL: f64 = 1e-12;
const GRID_TOL: f64 = 1e-9;
const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelsError {
    #[error("interior grid must be strictly increasing inside (0, {limit}); offending value {value}")]
    BadGrid { value: f64, limit: f64 },
    #[error("{name} = {value} must be a positive multiple of the grid step {step}")]
    NotOnGrid { name: &'static str, value: f64, step: f64 },
    #[error("demand pmf sums to {0}, expected 1")]
    PmfMass(f64),
    #[error("demand value {0} is negative or not on the grid")]
    BadDemand(f64),
    #[error("demand probability {0} is negative or non-finite")]
    BadProbability(f64),
    #[error("holding table has {got} entries, expected {expected} (one per grid level)")]
    HoldingLength { got: usize, expected: usize },
    #[error("holding cost {0} is negative or non-finite")]
    BadHolding(f64),
    #[error("cost parameter {name} = {value} must be nonnegative and finite")]
    BadCost { name: &'static str, value: f64 },
    #[error("demand never exceeds the maximum order size; the lost-sale state may be unreachable")]
    DemandNeverExceedsOrders,
    #[error("policy simulation requires a row-stochastic kernel")]
    NotStochastic,
    #[error("simulation needs at least one replication and a positive horizon")]
    EmptySimulation,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The endpoint `(√5 − 1)/2` of the discontinuity chain.
pub fn ell_star() -> f64 {
    (5.0_f64.sqrt() - 1.0) / 2.0
}

/// Grid specification for the discontinuity chain.
#[derive(Debug, Clone)]
pub struct Remark1Spec {
    interior_grid: Vec<f64>,
    cost: f64,
}

impl Remark1Spec {
    /// Interior points must be strictly increasing and lie strictly between
    /// 0 and `ell_star()`. The one-step cost is constant, 1 by default.
    pub fn new(interior_grid: Vec<f64>) -> Result<Self, ModelsError> {
        Self::with_cost(interior_grid, 1.0)
    }

    pub fn with_cost(interior_grid: Vec<f64>, cost: f64) -> Result<Self, ModelsError> {
        let limit = ell_star();
        let mut prev = 0.0;
        for &x in &interior_grid {
            if !x.is_finite() || x <= prev || x >= limit {
                return Err(ModelsError::BadGrid { value: x, limit });
            }
            prev = x;
        }
        if cost < 0.0 || !cost.is_finite() {
            return Err(ModelsError::BadCost { name: "cost", value: cost });
        }
        Ok(Remark1Spec { interior_grid, cost })
    }

    pub fn interior_grid(&self) -> &[f64] {
        &self.interior_grid
    }
}

/// Builds the single-action chain on `{0} ∪ grid ∪ {ℓ*}`.
///
/// Transitions: state 0 jumps to the endpoint; an interior point `x` stays
/// put with probability `x²`, jumps to the endpoint with `1 − x − x²`, and
/// drops to 0 with `x`; the endpoint stays with `1 − ℓ*` and drops to 0
/// with `ℓ*`. Rows are exactly stochastic. The endpoint state is last and
/// is labelled `ell`.
pub fn build_remark1_mdp(spec: &Remark1Spec) -> FiniteMdp {
    let grid = &spec.interior_grid;
    let n = grid.len() + 2;
    let endpoint = n - 1;
    let ell = ell_star();

    let mut states = Vec::with_capacity(n);
    states.push("0".to_string());
    for &x in grid {
        states.push(format!("{x}"));
    }
    states.push("ell".to_string());

    let mut kernel = Vec::with_capacity(n);
    kernel.push(vec![vec![(endpoint, 1.0)]]);
    for (i, &x) in grid.iter().enumerate() {
        kernel.push(vec![vec![
            (0, x),
            (i + 1, x * x),
            (endpoint, 1.0 - x - x * x),
        ]]);
    }
    kernel.push(vec![vec![(0, ell), (endpoint, 1.0 - ell)]]);

    let actions = vec![vec!["a0".to_string()]; n];
    let cost = vec![vec![spec.cost]; n];
    FiniteMdp::new(states, actions, kernel, cost).expect("construction is structurally sound")
}

/// Parameters of the capacitated lost-sales inventory model. All quantities
/// live on the grid `{0, Δ, …}`.
#[derive(Debug, Clone)]
pub struct InventorySpec {
    pub capacity: f64,
    pub max_order: f64,
    pub grid_step: f64,
    /// Demand pmf on grid multiples, as `(demand, probability)` pairs.
    pub demand_pmf: Vec<(f64, f64)>,
    pub fixed_cost: f64,
    pub unit_cost: f64,
    /// Holding cost at each grid level `0, Δ, …, capacity`.
    pub holding: Vec<f64>,
}

impl InventorySpec {
    pub fn validate(&self) -> Result<(), ModelsError> {
        let step = self.grid_step;
        if step <= 0.0 || !step.is_finite() {
            return Err(ModelsError::NotOnGrid {
                name: "grid_step",
                value: step,
                step,
            });
        }
        for (name, value) in [("capacity", self.capacity), ("max_order", self.max_order)] {
            let units = value / step;
            if !value.is_finite() || value <= 0.0 || (units - units.round()).abs() > GRID_TOL {
                return Err(ModelsError::NotOnGrid { name, value, step });
            }
        }
        let mut mass = 0.0;
        for &(d, g) in &self.demand_pmf {
            let units = d / step;
            if !d.is_finite() || d < 0.0 || (units - units.round()).abs() > GRID_TOL {
                return Err(ModelsError::BadDemand(d));
            }
            if g < 0.0 || !g.is_finite() {
                return Err(ModelsError::BadProbability(g));
            }
            mass += g;
        }
        if (mass - 1.0).abs() > PMF_TOL {
            return Err(ModelsError::PmfMass(mass));
        }
        let levels = (self.capacity / step).round() as usize + 1;
        if self.holding.len() != levels {
            return Err(ModelsError::HoldingLength {
                got: self.holding.len(),
                expected: levels,
            });
        }
        for &h in &self.holding {
            if h < 0.0 || !h.is_finite() {
                return Err(ModelsError::BadHolding(h));
            }
        }
        for (name, value) in [("fixed_cost", self.fixed_cost), ("unit_cost", self.unit_cost)] {
            if value < 0.0 || !value.is_finite() {
                return Err(ModelsError::BadCost { name, value });
            }
        }
        Ok(())
    }

    fn capacity_units(&self) -> usize {
        (self.capacity / self.grid_step).round() as usize
    }

    fn order_units(&self) -> usize {
        (self.max_order / self.grid_step).round() as usize
    }

    fn demand_units(&self) -> Vec<(usize, f64)> {
        self.demand_pmf
            .iter()
            .map(|&(d, g)| ((d / self.grid_step).round() as usize, g))
            .collect()
    }
}

/// Index of the lost-sale marker state produced by the inventory builders:
/// it is appended after the grid levels.
pub fn lost_sale_state(spec: &InventorySpec) -> usize {
    spec.capacity_units() + 1
}

/// States, per-state action labels, cost table, capacity units, and the
/// lost-sale index shared by the two inventory builders.
type InventoryScaffold = (Vec<String>, Vec<Vec<String>>, Vec<Vec<f64>>, usize, usize);

fn inventory_scaffold(spec: &InventorySpec) -> InventoryScaffold {
    let cap = spec.capacity_units();
    let orders = spec.order_units();
    let lost = cap + 1;
    let n = cap + 2;
    let step = spec.grid_step;

    let mut states: Vec<String> = (0..=cap).map(|i| format!("{}", i as f64 * step)).collect();
    states.push("0_L".to_string());
    let action_labels: Vec<String> = (0..=orders).map(|j| format!("{}", j as f64 * step)).collect();
    let actions = vec![action_labels; n];

    let demands = spec.demand_units();
    let mut cost = Vec::with_capacity(n);
    for x in 0..n {
        // The lost-sale marker holds zero physical stock.
        let stock = if x == lost { 0 } else { x };
        let mut row = Vec::with_capacity(orders + 1);
        for a in 0..=orders {
            let order_cost = if a > 0 {
                spec.fixed_cost + spec.unit_cost * (a as f64 * step)
            } else {
                0.0
            };
            let mut holding = 0.0;
            for &(d, g) in &demands {
                let level = if stock + a >= d {
                    (stock + a - d).min(cap)
                } else {
                    0 // lost sale: held stock is zero
                };
                holding += g * spec.holding[level];
            }
            row.push(order_cost + holding);
        }
        cost.push(row);
    }
    (states, actions, cost, cap, lost)
}

/// Builds the inventory MDP: states are the grid levels plus the lost-sale
/// marker `0_L`, actions are the order quantities `0, Δ, …, M`, and the
/// kernel follows `next = min(x + a − d, C)` when `x + a ≥ d` and `0_L`
/// otherwise, with `0_L` behaving like level 0 dynamically. Rows are exactly
/// stochastic.
pub fn build_inventory_mdp(spec: &InventorySpec) -> Result<FiniteMdp, ModelsError> {
    spec.validate()?;
    let (states, actions, cost, cap, lost) = inventory_scaffold(spec);
    let demands = spec.demand_units();
    let orders = spec.order_units();
    let n = cap + 2;

    let mut kernel = Vec::with_capacity(n);
    for x in 0..n {
        let stock = if x == lost { 0 } else { x };
        let mut rows = Vec::with_capacity(orders + 1);
        for a in 0..=orders {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(demands.len());
            for &(d, g) in &demands {
                let target = if stock + a >= d {
                    (stock + a - d).min(cap)
                } else {
                    lost
                };
                row.push((target, g));
            }
            rows.push(row);
        }
        kernel.push(rows);
    }
    Ok(FiniteMdp::new(states, actions, kernel, cost)?)
}

/// Checks that demand exceeds the maximum order size with positive
/// probability; returns that probability γ. This is what makes the lost-sale
/// state reachable under every policy.
pub fn check_assumption_d(spec: &InventorySpec) -> Result<(bool, f64), ModelsError> {
    spec.validate()?;
    let gamma: f64 = spec
        .demand_pmf
        .iter()
        .filter(|&&(d, _)| d > spec.max_order + GRID_TOL * spec.grid_step)
        .map(|&(_, g)| g)
        .sum();
    Ok((gamma > 0.0, gamma))
}

/// The closed-form constant `(⌈C/M⌉ + 1) / γ^(⌈C/M⌉ + 1)` intended to bound
/// the expected number of periods to the first lost sale.
///
/// Caution: when demand exceeds the maximum order by only a small margin the
/// stock drains by that margin per high-demand period, not by a full order
/// quantity, so this constant can undershoot the true supremum. Compare it
/// with the certified value from `compute_mu_ell`; the tests exhibit an
/// instance where this formula is not an upper bound.
pub fn k_ell_bound(spec: &InventorySpec) -> Result<f64, ModelsError> {
    let (holds, gamma) = check_assumption_d(spec)?;
    if !holds {
        return Err(ModelsError::DemandNeverExceedsOrders);
    }
    let m = (spec.capacity / spec.max_order).ceil() as i32 + 1;
    Ok(f64::from(m) / gamma.powi(m))
}

/// The total-cost variant: identical to [`build_inventory_mdp`] except every
/// transition into the lost-sale marker is deleted, so trajectories
/// terminate at the first lost sale and the kernel is sub-stochastic.
pub fn build_lost_sale_total_cost_mdp(spec: &InventorySpec) -> Result<FiniteMdp, ModelsError> {
    let (holds, _) = check_assumption_d(spec)?;
    if !holds {
        return Err(ModelsError::DemandNeverExceedsOrders);
    }
    let (states, actions, cost, cap, lost) = inventory_scaffold(spec);
    let demands = spec.demand_units();
    let orders = spec.order_units();
    let n = cap + 2;

    let mut kernel = Vec::with_capacity(n);
    for x in 0..n {
        let stock = if x == lost { 0 } else { x };
        let mut rows = Vec::with_capacity(orders + 1);
        for a in 0..=orders {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(demands.len());
            for &(d, g) in &demands {
                if stock + a >= d {
                    row.push(((stock + a - d).min(cap), g));
                }
            }
            rows.push(row);
        }
        kernel.push(rows);
    }
    Ok(FiniteMdp::new(states, actions, kernel, cost)?)
}

/// Monte-Carlo estimate of the long-run average cost of a policy: runs
/// `replications` independent trajectories of `horizon` steps and returns
/// the mean per-step cost and its standard error across replications. The
/// stream is fully determined by `seed`.
pub fn simulate_policy(
    m: &FiniteMdp,
    policy: &StationaryPolicy,
    start: usize,
    horizon: usize,
    replications: usize,
    seed: u64,
) -> Result<(f64, f64), ModelsError> {
    if start >= m.n_states() {
        return Err(ModelsError::Model(ModelError::NoSuchState(start)));
    }
    if !m.is_row_stochastic(STOCHASTIC_TOL) {
        return Err(ModelsError::NotStochastic);
    }
    if horizon == 0 || replications == 0 {
        return Err(ModelsError::EmptySimulation);
    }
    // Per-(state, action) cumulative mass tables for inverse-cdf sampling.
    let cumulative: Vec<(Vec<usize>, Vec<f64>)> = (0..m.n_states())
        .map(|x| {
            let row = m.kernel_row(x, policy.action(x));
            let mut targets = Vec::with_capacity(row.len());
            let mut cum = Vec::with_capacity(row.len());
            let mut acc = 0.0;
            for &(t, mass) in row {
                acc += mass;
                targets.push(t);
                cum.push(acc);
            }
            (targets, cum)
        })
        .collect();

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut averages = Vec::with_capacity(replications);
    for _ in 0..replications {
        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        let mut x = start;
        let mut total = 0.0;
        for _ in 0..horizon {
            total += m.cost(x, policy.action(x));
            let (targets, cum) = &cumulative[x];
            let u: f64 = rng.gen();
            let idx = cum.partition_point(|&c| c < u).min(targets.len() - 1);
            x = targets[idx];
        }
        averages.push(total / horizon as f64);
    }
    let mean = averages.iter().sum::<f64>() / replications as f64;
    let se = if replications > 1 {
        let var = averages.iter().map(|a| (a - mean).powi(2)).sum::<f64>()
            / (replications as f64 - 1.0);
        (var / replications as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}
