//! The JSON model file format.
//!
//! A model document either spells out the MDP explicitly:
//!
//! ```json
//! {
//!   "states": ["s0", "s1"],
//!   "actions": {"s0": ["a0"], "s1": ["a0"]},
//!   "kernel": [["s0", "a0", "s1", 0.5], ["s1", "a0", "s1", 0.4]],
//!   "cost": [["s0", "a0", 1.0], ["s1", "a0", 2.0]],
//!   "V": {"s0": 1.0, "s1": 1.0},
//!   "ell": "s1"
//! }
//! ```
//!
//! or replaces the explicit lists with exactly one generator block,
//! `"inventory"` or `"remark1"`. The optional `"V"` map defaults missing
//! states to 1; the optional `"ell"` names the marked state (generators
//! default it to `0_L` and `ell` respectively).

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use undiscount::{
    build_inventory_mdp, build_remark1_mdp, validate_model, FiniteMdp, InventorySpec,
    Remark1Spec, ValidationReport, WeightFunction, WeightRole,
};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actions: Option<BTreeMap<String, Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<(String, String, String, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<Vec<(String, String, f64)>>,
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    pub v: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inventory: Option<InventoryDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remark1: Option<Remark1Doc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventoryDoc {
    pub capacity: f64,
    pub max_order: f64,
    pub grid_step: f64,
    /// Demand values (as numeric strings, multiples of the grid step) to
    /// probabilities.
    pub demand_pmf: BTreeMap<String, f64>,
    pub fixed_cost: f64,
    pub unit_cost: f64,
    pub holding: Vec<f64>,
}

fn default_remark1_cost() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Remark1Doc {
    pub interior_grid: Vec<f64>,
    #[serde(default = "default_remark1_cost")]
    pub cost: f64,
}

/// A parsed model plus the options the file carried.
#[derive(Debug)]
pub struct LoadedModel {
    pub mdp: FiniteMdp,
    pub weight: Option<WeightFunction>,
    pub ell: Option<usize>,
    pub validation: ValidationReport,
}

pub fn parse_model(path: &Path) -> Result<LoadedModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let doc: ModelDoc = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    model_from_doc(&doc)
}

pub fn model_from_doc(doc: &ModelDoc) -> Result<LoadedModel, CliError> {
    let explicit = [
        doc.states.is_some(),
        doc.actions.is_some(),
        doc.kernel.is_some(),
        doc.cost.is_some(),
    ];
    let has_explicit = explicit.iter().any(|&b| b);
    let generators = doc.inventory.is_some() as usize + doc.remark1.is_some() as usize;
    if generators > 1 {
        return Err(CliError::input(
            "at most one generator block (\"inventory\" or \"remark1\") is allowed",
        ));
    }
    if generators == 1 && has_explicit {
        return Err(CliError::input(
            "a generator block and explicit \"states\"/\"actions\"/\"kernel\"/\"cost\" lists \
             are mutually exclusive",
        ));
    }

    let (mdp, default_ell) = if let Some(inv) = &doc.inventory {
        let spec = inventory_spec_from_doc(inv)?;
        let m = build_inventory_mdp(&spec).map_err(|e| CliError::input(e.to_string()))?;
        (m, Some("0_L".to_string()))
    } else if let Some(r1) = &doc.remark1 {
        let spec = Remark1Spec::with_cost(r1.interior_grid.clone(), r1.cost)
            .map_err(|e| CliError::input(e.to_string()))?;
        (build_remark1_mdp(&spec), Some("ell".to_string()))
    } else {
        (explicit_model_from_doc(doc)?, None)
    };

    let labels: HashMap<&str, usize> = mdp
        .state_labels()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let weight = match &doc.v {
        None => None,
        Some(map) => {
            let mut values = vec![1.0; mdp.n_states()];
            for (label, &value) in map {
                let idx = *labels.get(label.as_str()).ok_or_else(|| {
                    CliError::input(format!("\"V\" references unknown state \"{label}\""))
                })?;
                values[idx] = value;
            }
            Some(
                WeightFunction::new(values, WeightRole::Reference)
                    .map_err(|e| CliError::input(format!("\"V\": {e}")))?,
            )
        }
    };

    let ell = match doc.ell.clone().or(default_ell) {
        None => None,
        Some(label) => Some(*labels.get(label.as_str()).ok_or_else(|| {
            CliError::input(format!("\"ell\" references unknown state \"{label}\""))
        })?),
    };

    let validation = validate_model(&mdp);
    Ok(LoadedModel { mdp, weight, ell, validation })
}

fn inventory_spec_from_doc(doc: &InventoryDoc) -> Result<InventorySpec, CliError> {
    let mut demand_pmf = Vec::with_capacity(doc.demand_pmf.len());
    for (key, &prob) in &doc.demand_pmf {
        let demand: f64 = key.parse().map_err(|_| {
            CliError::input(format!("demand_pmf key \"{key}\" is not a number"))
        })?;
        demand_pmf.push((demand, prob));
    }
    Ok(InventorySpec {
        capacity: doc.capacity,
        max_order: doc.max_order,
        grid_step: doc.grid_step,
        demand_pmf,
        fixed_cost: doc.fixed_cost,
        unit_cost: doc.unit_cost,
        holding: doc.holding.clone(),
    })
}

fn explicit_model_from_doc(doc: &ModelDoc) -> Result<FiniteMdp, CliError> {
    let states = doc
        .states
        .clone()
        .ok_or_else(|| CliError::input("missing \"states\""))?;
    let mut labels: HashMap<&str, usize> = HashMap::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        if labels.insert(s.as_str(), i).is_some() {
            return Err(CliError::input(format!("duplicate state label \"{s}\"")));
        }
    }
    let action_map = doc
        .actions
        .as_ref()
        .ok_or_else(|| CliError::input("missing \"actions\""))?;
    for label in action_map.keys() {
        if !labels.contains_key(label.as_str()) {
            return Err(CliError::input(format!(
                "\"actions\" references unknown state \"{label}\""
            )));
        }
    }
    let mut actions: Vec<Vec<String>> = Vec::with_capacity(states.len());
    let mut action_index: Vec<HashMap<String, usize>> = Vec::with_capacity(states.len());
    for s in &states {
        let list = action_map.get(s).cloned().unwrap_or_default();
        let mut index = HashMap::with_capacity(list.len());
        for (a, name) in list.iter().enumerate() {
            if index.insert(name.clone(), a).is_some() {
                return Err(CliError::input(format!(
                    "duplicate action label \"{name}\" at state \"{s}\""
                )));
            }
        }
        actions.push(list);
        action_index.push(index);
    }

    let resolve = |state: &str, action: &str, what: &str| -> Result<(usize, usize), CliError> {
        let x = *labels.get(state).ok_or_else(|| {
            CliError::input(format!("{what} references unknown state \"{state}\""))
        })?;
        let a = *action_index[x].get(action).ok_or_else(|| {
            CliError::input(format!(
                "{what} references unknown action \"{action}\" at state \"{state}\""
            ))
        })?;
        Ok((x, a))
    };

    let mut kernel: Vec<Vec<Vec<(usize, f64)>>> = actions
        .iter()
        .map(|list| vec![Vec::new(); list.len()])
        .collect();
    for (state, action, target, mass) in doc.kernel.as_deref().unwrap_or(&[]) {
        let (x, a) = resolve(state, action, "\"kernel\" entry")?;
        let t = *labels.get(target.as_str()).ok_or_else(|| {
            CliError::input(format!("\"kernel\" entry references unknown state \"{target}\""))
        })?;
        kernel[x][a].push((t, *mass));
    }

    let mut cost: Vec<Vec<Option<f64>>> = actions
        .iter()
        .map(|list| vec![None; list.len()])
        .collect();
    for (state, action, value) in doc.cost.as_deref().unwrap_or(&[]) {
        let (x, a) = resolve(state, action, "\"cost\" entry")?;
        if cost[x][a].replace(*value).is_some() {
            return Err(CliError::input(format!(
                "duplicate \"cost\" entry for state \"{state}\", action \"{action}\""
            )));
        }
    }
    let cost: Vec<Vec<f64>> = cost
        .into_iter()
        .enumerate()
        .map(|(x, row)| {
            row.into_iter()
                .enumerate()
                .map(|(a, c)| {
                    c.ok_or_else(|| {
                        CliError::input(format!(
                            "missing \"cost\" entry for state \"{}\", action \"{}\"",
                            states[x], actions[x][a]
                        ))
                    })
                })
                .collect::<Result<Vec<f64>, CliError>>()
        })
        .collect::<Result<_, _>>()?;

    FiniteMdp::new(states, actions, kernel, cost).map_err(|e| CliError::input(e.to_string()))
}

/// Serializes a model (plus options) back into document form, with kernel
/// and cost entries ordered by state, action, and target index.
#[cfg(test)]
pub fn doc_from_model(
    m: &FiniteMdp,
    weight: Option<&WeightFunction>,
    ell: Option<usize>,
) -> ModelDoc {
    let mut kernel = Vec::new();
    let mut cost = Vec::new();
    let mut actions = BTreeMap::new();
    for x in 0..m.n_states() {
        actions.insert(m.state_label(x).to_string(), m.action_labels(x).to_vec());
        for a in 0..m.n_actions(x) {
            for &(t, mass) in m.kernel_row(x, a) {
                kernel.push((
                    m.state_label(x).to_string(),
                    m.action_label(x, a).to_string(),
                    m.state_label(t).to_string(),
                    mass,
                ));
            }
            cost.push((
                m.state_label(x).to_string(),
                m.action_label(x, a).to_string(),
                m.cost(x, a),
            ));
        }
    }
    ModelDoc {
        states: Some(m.state_labels().to_vec()),
        actions: Some(actions),
        kernel: Some(kernel),
        cost: Some(cost),
        v: weight.map(|w| {
            (0..m.n_states())
                .map(|x| (m.state_label(x).to_string(), w.value(x)))
                .collect()
        }),
        ell: ell.map(|e| m.state_label(e).to_string()),
        inventory: None,
        remark1: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::render_json;

    fn fix_a_doc() -> ModelDoc {
        serde_json::from_str(
            r#"{
                "states": ["s0", "s1"],
                "actions": {"s0": ["a0"], "s1": ["a0"]},
                "kernel": [["s0", "a0", "s1", 0.5], ["s1", "a0", "s1", 0.4]],
                "cost": [["s0", "a0", 1.0], ["s1", "a0", 2.0]],
                "V": {"s0": 1.0, "s1": 1.0},
                "ell": "s1"
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn explicit_model_parses() {
        let loaded = model_from_doc(&fix_a_doc()).unwrap();
        assert_eq!(loaded.mdp.n_states(), 2);
        assert_eq!(loaded.ell, Some(1));
        assert!(loaded.validation.is_valid());
        assert_eq!(loaded.weight.unwrap().values(), &[1.0, 1.0]);
    }

    #[test]
    fn write_then_parse_reproduces_the_model_bit_for_bit() {
        let loaded = model_from_doc(&fix_a_doc()).unwrap();
        let doc = doc_from_model(&loaded.mdp, loaded.weight.as_ref(), loaded.ell);
        let text = render_json(&doc);
        let reparsed: ModelDoc = serde_json::from_str(&text).unwrap();
        let reloaded = model_from_doc(&reparsed).unwrap();
        assert_eq!(loaded.mdp, reloaded.mdp);
        assert_eq!(loaded.weight, reloaded.weight);
        assert_eq!(loaded.ell, reloaded.ell);
        // A second round trip is byte-identical.
        let doc2 = doc_from_model(&reloaded.mdp, reloaded.weight.as_ref(), reloaded.ell);
        assert_eq!(text, render_json(&doc2));
    }

    #[test]
    fn generator_round_trip_preserves_masses_exactly() {
        let doc: ModelDoc = serde_json::from_str(
            r#"{"remark1": {"interior_grid": [0.2, 0.4, 0.6]}}"#,
        )
        .unwrap();
        let loaded = model_from_doc(&doc).unwrap();
        assert_eq!(loaded.ell, Some(loaded.mdp.n_states() - 1));
        let expanded = doc_from_model(&loaded.mdp, None, loaded.ell);
        let text = render_json(&expanded);
        let reparsed: ModelDoc = serde_json::from_str(&text).unwrap();
        let reloaded = model_from_doc(&reparsed).unwrap();
        assert_eq!(loaded.mdp, reloaded.mdp);
    }

    #[test]
    fn unknown_labels_are_named_in_errors() {
        let doc: ModelDoc = serde_json::from_str(
            r#"{
                "states": ["s0"],
                "actions": {"s0": ["a0"]},
                "kernel": [["s0", "a0", "ghost", 0.5]],
                "cost": [["s0", "a0", 1.0]]
            }"#,
        )
        .unwrap();
        let err = model_from_doc(&doc).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }

    #[test]
    fn generator_and_explicit_lists_are_exclusive() {
        let doc: ModelDoc = serde_json::from_str(
            r#"{
                "states": ["s0"],
                "remark1": {"interior_grid": [0.2]}
            }"#,
        )
        .unwrap();
        let err = model_from_doc(&doc).unwrap_err();
        assert!(err.to_string().contains("mutually exclusive"), "{err}");
    }

    #[test]
    fn inventory_generator_expands_with_default_marked_state() {
        let doc: ModelDoc = serde_json::from_str(
            r#"{"inventory": {
                "capacity": 4, "max_order": 2, "grid_step": 1,
                "demand_pmf": {"0": 0.3, "1": 0.3, "2": 0.2, "3": 0.2},
                "fixed_cost": 5, "unit_cost": 1,
                "holding": [0.0, 0.5, 1.0, 1.5, 2.0]
            }}"#,
        )
        .unwrap();
        let loaded = model_from_doc(&doc).unwrap();
        assert_eq!(loaded.mdp.n_states(), 6);
        assert_eq!(loaded.mdp.state_label(loaded.ell.unwrap()), "0_L");
    }
}
