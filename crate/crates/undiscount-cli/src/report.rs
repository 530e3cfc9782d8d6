//! Run reports: structured JSON with deterministic number formatting.
//!
//! Floats are printed with 17 significant digits (`{:.16e}`), which
//! round-trips every f64 exactly, so identical inputs produce byte-identical
//! reports.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub options: OptionsSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certification: Option<CertificationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transformation: Option<TransformationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<ResidualsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub golden: Option<GoldenSection>,
    /// Machine-greppable outcome of each verification this run performed.
    pub checks: Vec<Check>,
}

#[derive(Debug, Serialize)]
pub struct OptionsSection {
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_cap: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct ValidationSection {
    pub valid: bool,
    pub violations: Vec<String>,
    pub sup_row_mass: f64,
}

#[derive(Debug, Serialize)]
pub struct CertificationSection {
    /// "occupation" for transience, "hitting-time" for a marked state.
    pub kind: String,
    pub k_hat: f64,
    pub sup_weight_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_hat_excluding_marked: Option<f64>,
    pub iterations: u64,
    pub residual: f64,
    pub certified: bool,
    pub min_admissible_beta: f64,
    pub contraction: ContractionSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<Vec<(String, f64)>>,
}

#[derive(Debug, Serialize)]
pub struct ContractionSection {
    pub max_ratio: f64,
    pub bound: f64,
    pub ratios_evaluated: u64,
    pub ratios_skipped: u64,
    pub certified: bool,
}

#[derive(Debug, Serialize)]
pub struct TransformationSection {
    /// "hv" for the total-cost rewrite, "hv-ag" for the average-cost one.
    pub kind: String,
    pub beta: f64,
    pub states: u64,
    pub absorbing_state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marked_state: Option<String>,
    pub row_sum_max_defect: f64,
}

#[derive(Debug, Serialize)]
pub struct SolutionSection {
    pub method: String,
    pub iterations: u64,
    pub converged: bool,
    pub residual_sup: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_cost: Option<f64>,
    pub values: Vec<(String, f64)>,
    pub policy: Vec<(String, String)>,
}

#[derive(Debug, Serialize)]
pub struct ResidualsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tcoe: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acoe: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dcoe_min_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dcoe_policy_form: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct OracleSection {
    pub criterion: String,
    pub policies_enumerated: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_average: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_total: Option<Vec<(String, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simultaneous_optimum: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct SimulationSection {
    pub start: String,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    pub mean: f64,
    pub standard_error: f64,
    pub deviation_from_average_cost: f64,
    pub within_three_standard_errors: bool,
}

#[derive(Debug, Serialize)]
pub struct GoldenSection {
    /// `(state, computed, expected, absolute error)` per golden value.
    pub values: Vec<(String, f64, f64, f64)>,
    pub worst_error: f64,
    pub discontinuity_gap: f64,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub id: String,
    pub pass: bool,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl Check {
    pub fn le(id: &str, value: f64, threshold: f64) -> Self {
        Check {
            id: id.to_string(),
            pass: value <= threshold,
            value,
            threshold: Some(threshold),
        }
    }

    pub fn flag(id: &str, pass: bool) -> Self {
        Check {
            id: id.to_string(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            threshold: None,
        }
    }
}

/// Pretty JSON formatter that renders every float with 17 significant
/// digits.
struct SigFigFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

macro_rules! forward {
    ($name:ident) => {
        fn $name<W>(&mut self, writer: &mut W) -> io::Result<()>
        where
            W: ?Sized + Write,
        {
            self.inner.$name(writer)
        }
    };
    ($name:ident, first) => {
        fn $name<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
        where
            W: ?Sized + Write,
        {
            self.inner.$name(writer, first)
        }
    };
}

impl Formatter for SigFigFormatter<'_> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        debug_assert!(value.is_finite(), "reports must not carry non-finite numbers");
        write!(writer, "{value:.16e}")
    }

    forward!(begin_array);
    forward!(end_array);
    forward!(begin_array_value, first);
    forward!(end_array_value);
    forward!(begin_object);
    forward!(end_object);
    forward!(begin_object_key, first);
    forward!(begin_object_value);
    forward!(end_object_value);
}

/// Renders a report as deterministic pretty JSON with a trailing newline.
pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(
        &mut out,
        SigFigFormatter { inner: PrettyFormatter::new() },
    );
    value
        .serialize(&mut ser)
        .expect("report serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("report is valid UTF-8")
}

/// Renders a `state,value` table with the same float formatting as the
/// reports.
pub fn render_csv(values: &[(String, f64)]) -> String {
    let mut out = String::from("state,value\n");
    for (state, value) in values {
        out.push_str(&format!("{state},{value:.16e}\n"));
    }
    out
}
