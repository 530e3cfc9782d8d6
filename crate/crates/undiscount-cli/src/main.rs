//! File-based front end: parse a model, run a pipeline
//! (certify → transform → solve → lift → verify), and emit a
//! machine-readable report.
//!
//! Exit status: 0 on success, 1 when certification or a verification check
//! fails, 2 on input errors.

mod model_file;
mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use model_file::{model_from_doc, parse_model, LoadedModel, Remark1Doc};
use report::*;
use undiscount::*;

const COMPUTE_MAX_ITER: usize = 500_000;
const SOLVE_MAX_ITER: usize = 2_000_000;
const CONTRACTION_SLACK: f64 = 1e-9;
const ROW_DEFECT_THRESHOLD: f64 = 1e-12;
const TCOE_THRESHOLD: f64 = 1e-8;
const ACOE_THRESHOLD: f64 = 1e-8;
const TOTAL_ORACLE_GAP: f64 = 1e-7;
const AVERAGE_ORACLE_GAP: f64 = 1e-6;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or unsuitable input: exit status 2.
    Input(String),
    /// A certification failed: exit status 1.
    Certification(String),
    /// A downstream pipeline step failed: exit status 1.
    Pipeline(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Certification(_) | CliError::Pipeline(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Certification(m) | CliError::Pipeline(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::InvalidModel(_)
            | BoundError::BadTolerance
            | BoundError::InvalidWeight
            | BoundError::NoSuchState(_)
            | BoundError::Dimension(_) => CliError::Input(e.to_string()),
            _ => CliError::Certification(e.to_string()),
        }
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        CliError::Pipeline(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Pipeline(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { .. } | OracleError::NotStochastic => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Pipeline(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "undiscount",
    version,
    about = "Reduce undiscounted total-cost and average-cost MDPs to discounted ones, \
             solve them, lift the solutions back, and verify the results"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-state value table here as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArg {
    /// Path to a JSON model file.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct TolArg {
    /// Certification and solver tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model invariants and report violations.
    Validate {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Certify transience: compute the occupation-bound weight.
    CertifyT {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        tol: TolArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Certify the hitting-time bound for a marked state.
    CertifyHt {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        tol: TolArg,
        /// Marked state label (defaults to the model file's "ell").
        #[arg(long)]
        ell: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Full total-cost pipeline: certify, rewrite, solve, lift, verify.
    ReduceTotal {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        tol: TolArg,
        /// Discount factor; defaults to the minimum admissible value.
        #[arg(long)]
        beta: Option<f64>,
        /// Enumerate up to this many policies and compare with the exact
        /// optimum.
        #[arg(long)]
        oracle_cap: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Full average-cost pipeline around a marked state.
    ReduceAverage {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        tol: TolArg,
        #[arg(long)]
        beta: Option<f64>,
        /// Marked state label (defaults to the model file's "ell").
        #[arg(long)]
        ell: Option<String>,
        #[arg(long)]
        oracle_cap: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve the model file directly as a discounted MDP.
    Solve {
        #[command(flatten)]
        model: ModelArg,
        /// Discount factor; beta times the largest row mass must be below 1.
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        tol: TolArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exhaustive policy enumeration: exact optimum on small instances.
    Oracle {
        #[command(flatten)]
        model: ModelArg,
        /// Marked state label; selects the average-cost criterion.
        #[arg(long)]
        ell: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        oracle_cap: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// End-to-end showcase on the built-in lost-sales inventory instance.
    InventoryDemo {
        /// Simulation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Golden values and the marked-state jump of the discontinuity chain.
    Remark1Demo {
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Validate { model, output } => cmd_validate(&model.model, &output),
        Command::CertifyT { model, tol, output } => cmd_certify_t(&model.model, tol.tol, &output),
        Command::CertifyHt { model, tol, ell, output } => {
            cmd_certify_ht(&model.model, tol.tol, ell.as_deref(), &output)
        }
        Command::ReduceTotal { model, tol, beta, oracle_cap, output } => {
            cmd_reduce_total(&model.model, tol.tol, beta, oracle_cap, &output)
        }
        Command::ReduceAverage { model, tol, beta, ell, oracle_cap, output } => {
            cmd_reduce_average(&model.model, tol.tol, beta, ell.as_deref(), oracle_cap, &output)
        }
        Command::Solve { model, beta, tol, output } => {
            cmd_solve(&model.model, beta, tol.tol, &output)
        }
        Command::Oracle { model, ell, oracle_cap, output } => {
            cmd_oracle(&model.model, ell.as_deref(), oracle_cap, &output)
        }
        Command::InventoryDemo { seed, output } => cmd_inventory_demo(seed, &output),
        Command::Remark1Demo { output } => cmd_remark1_demo(&output),
    }
}

// ── Shared helpers ───────────────────────────────────────────────────────

fn emit(
    rep: &RunReport,
    output: &OutputArgs,
    table: Option<&[(String, f64)]>,
) -> Result<(), CliError> {
    let text = render_json(rep);
    match &output.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if let Some(path) = &output.csv {
        let table = table.ok_or_else(|| {
            CliError::input("this command produces no per-state value table for --csv")
        })?;
        std::fs::write(path, render_csv(table))
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn exit_from_checks(checks: &[Check]) -> u8 {
    if checks.iter().all(|c| c.pass) {
        0
    } else {
        1
    }
}

fn load_valid_model(path: &Path) -> Result<LoadedModel, CliError> {
    let loaded = parse_model(path)?;
    if !loaded.validation.is_valid() {
        let list: Vec<String> = loaded.validation.violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::input(format!(
            "model violates invariants: {}",
            list.join("; ")
        )));
    }
    Ok(loaded)
}

fn resolve_ell(
    m: &FiniteMdp,
    flag: Option<&str>,
    file_ell: Option<usize>,
) -> Result<usize, CliError> {
    match flag {
        Some(label) => m
            .state_index(label)
            .ok_or_else(|| CliError::input(format!("--ell references unknown state \"{label}\""))),
        None => file_ell.ok_or_else(|| {
            CliError::input("a marked state is required: pass --ell or set \"ell\" in the model file")
        }),
    }
}

fn validation_section(report: &ValidationReport) -> ValidationSection {
    ValidationSection {
        valid: report.is_valid(),
        violations: report.violations.iter().map(|v| v.to_string()).collect(),
        sup_row_mass: report.sup_row_mass,
    }
}

fn certification_section(
    m: &FiniteMdp,
    report: &BoundReport,
    include_weight: bool,
) -> Result<CertificationSection, CliError> {
    let contraction = report
        .contraction_certificate(CONTRACTION_SLACK)
        .map_err(|e| CliError::Pipeline(e.to_string()))?;
    let kind = match report.weight.role() {
        WeightRole::TabooOccupation { .. } => "hitting-time",
        _ => "occupation",
    };
    Ok(CertificationSection {
        kind: kind.to_string(),
        k_hat: report.k_hat,
        sup_weight_ratio: report.sup_weight_ratio,
        k_hat_excluding_marked: report.k_hat_excluding_marked,
        iterations: report.iterations as u64,
        residual: report.residual,
        certified: report.certified,
        min_admissible_beta: report.min_admissible_beta(),
        contraction: ContractionSection {
            max_ratio: contraction.max_ratio,
            bound: contraction.bound,
            ratios_evaluated: contraction.ratios_evaluated as u64,
            ratios_skipped: contraction.ratios_skipped as u64,
            certified: contraction.certified,
        },
        weight: include_weight.then(|| {
            (0..m.n_states())
                .map(|x| (m.state_label(x).to_string(), report.weight.value(x)))
                .collect()
        }),
    })
}

fn transformation_section(dp: &DiscountedProblem) -> TransformationSection {
    TransformationSection {
        kind: match dp.kind {
            TransformKind::Hv => "hv".to_string(),
            TransformKind::HvAg => "hv-ag".to_string(),
        },
        beta: dp.beta,
        states: dp.mdp.n_states() as u64,
        absorbing_state: dp.mdp.state_label(dp.absorbing_state).to_string(),
        marked_state: dp.marked_ell.map(|e| dp.mdp.state_label(e).to_string()),
        row_sum_max_defect: dp.row_sum_max_defect,
    }
}

type ValueTable = Vec<(String, f64)>;
type PolicyTable = Vec<(String, String)>;

/// Per-original-state table of a lifted quantity plus the restricted greedy
/// policy, labelled with the original model's names.
fn solution_tables(
    m: &FiniteMdp,
    dp: &DiscountedProblem,
    solved: &SolveReport,
    lifted: &[f64],
) -> (ValueTable, PolicyTable) {
    let policy = dp.restrict_policy(&solved.greedy_policy);
    let values = (0..m.n_states())
        .map(|x| (m.state_label(x).to_string(), lifted[x]))
        .collect();
    let actions = (0..m.n_states())
        .map(|x| {
            (
                m.state_label(x).to_string(),
                m.action_label(x, policy.action(x)).to_string(),
            )
        })
        .collect();
    (values, actions)
}

// ── Commands ─────────────────────────────────────────────────────────────

fn cmd_validate(path: &Path, output: &OutputArgs) -> Result<u8, CliError> {
    let loaded = parse_model(path)?;
    let valid = loaded.validation.is_valid();
    let rep = RunReport {
        command: "validate".to_string(),
        model: Some(path.display().to_string()),
        options: OptionsSection { tol: 0.0, beta: None, ell: None, seed: None, oracle_cap: None },
        validation: Some(validation_section(&loaded.validation)),
        certification: None,
        transformation: None,
        solution: None,
        residuals: None,
        oracle: None,
        simulation: None,
        golden: None,
        checks: vec![Check::flag("model-valid", valid)],
    };
    emit(&rep, output, None)?;
    Ok(if valid { 0 } else { 2 })
}

fn cmd_certify_t(path: &Path, tol: f64, output: &OutputArgs) -> Result<u8, CliError> {
    let loaded = load_valid_model(path)?;
    let v = loaded
        .weight
        .clone()
        .unwrap_or_else(|| WeightFunction::ones(loaded.mdp.n_states()));
    let bound = compute_mu(&loaded.mdp, &v, tol, COMPUTE_MAX_ITER)?;
    let certification = certification_section(&loaded.mdp, &bound, true)?;
    let weight_table = certification.weight.clone().unwrap_or_default();
    let checks = vec![
        Check::flag("certified", bound.certified),
        Check::flag("contraction-certified", certification.contraction.certified),
    ];
    let rep = RunReport {
        command: "certify-t".to_string(),
        model: Some(path.display().to_string()),
        options: OptionsSection { tol, beta: None, ell: None, seed: None, oracle_cap: None },
        validation: Some(validation_section(&loaded.validation)),
        certification: Some(certification),
        transformation: None,
        solution: None,
        residuals: None,
        oracle: None,
        simulation: None,
        golden: None,
        checks,
    };
    let code = exit_from_checks(&rep.checks);
    emit(&rep, output, Some(&weight_table))?;
    Ok(code)
}

fn cmd_certify_ht(
    path: &Path,
    tol: f64,
    ell_flag: Option<&str>,
    output: &OutputArgs,
) -> Result<u8, CliError> {
    let loaded = load_valid_model(path)?;
    let ell = resolve_ell(&loaded.mdp, ell_flag, loaded.ell)?;
    let bound = compute_mu_ell(&loaded.mdp, ell, tol, COMPUTE_MAX_ITER)?;
    let certification = certification_section(&loaded.mdp, &bound, true)?;
    let weight_table = certification.weight.clone().unwrap_or_default();
    let checks = vec![
        Check::flag("certified", bound.certified),
        Check::flag("contraction-certified", certification.contraction.certified),
    ];
    let rep = RunReport {
        command: "certify-ht".to_string(),
        model: Some(path.display().to_string()),
        options: OptionsSection {
            tol,
            beta: None,
            ell: Some(loaded.mdp.state_label(ell).to_string()),
            seed: None,
            oracle_cap: None,
        },
        validation: Some(validation_section(&loaded.validation)),
        certification: Some(certification),
        transformation: None,
        solution: None,
        residuals: None,
        oracle: None,
        simulation: None,
        golden: None,
        checks,
    };
    let code = exit_from_checks(&rep.checks);
    emit(&rep, output, Some(&weight_table))?;
    Ok(code)
}

fn cmd_reduce_total(
    path: &Path,
    tol: f64,
    beta_flag: Option<f64>,
    oracle_cap: Option<u64>,
    output: &OutputArgs,
) -> Result<u8, CliError> {
    let loaded = load_valid_model(path)?;
    let m = &loaded.mdp;
    let v = loaded
        .weight
        .clone()
        .unwrap_or_else(|| WeightFunction::ones(m.n_states()));
    let bound = compute_mu(m, &v, tol, COMPUTE_MAX_ITER)?;
    let beta = beta_flag.unwrap_or_else(|| bound.min_admissible_beta());
    let dp = hv_transform(m, &bound.weight, beta)?;
    let solved = value_iteration(&dp, tol, SOLVE_MAX_ITER)?;
    let lifted = lift_total_value(&dp, &solved.value)?;
    let (min_form, policy_form) = dcoe_residual(&dp, &solved.value, &solved.greedy_policy);
    let tcoe = tcoe_residual(m, &lifted);

    let mut checks = vec![
        Check::flag("certified", bound.certified),
        Check::le("rows-stochastic", dp.row_sum_max_defect, ROW_DEFECT_THRESHOLD),
        Check::flag("solver-converged", solved.converged),
        Check::le("tcoe-residual", tcoe, TCOE_THRESHOLD),
    ];
    let oracle = match oracle_cap {
        None => None,
        Some(cap) => {
            let result = brute_force_optimum(m, OracleCriterion::TotalCost, cap, false)?;
            let best = result.best_total.as_ref().expect("total criterion");
            let gap = lifted.sup_distance(best);
            checks.push(Check::le("oracle-agreement", gap, TOTAL_ORACLE_GAP));
            Some(OracleSection {
                criterion: "total-cost".to_string(),
                policies_enumerated: result.policies_enumerated,
                best_average: None,
                best_total: Some(
                    (0..m.n_states())
                        .map(|x| (m.state_label(x).to_string(), best[x]))
                        .collect(),
                ),
                agreement_gap: Some(gap),
                simultaneous_optimum: Some(result.simultaneous_optimum),
            })
        }
    };

    let (values, policy) = solution_tables(m, &dp, &solved, &lifted);
    let rep = RunReport {
        command: "reduce-total".to_string(),
        model: Some(path.display().to_string()),
        options: OptionsSection {
            tol,
            beta: Some(beta),
            ell: None,
            seed: None,
            oracle_cap,
        },
        validation: Some(validation_section(&loaded.validation)),
        certification: Some(certification_section(m, &bound, false)?),
        transformation: Some(transformation_section(&dp)),
        solution: Some(SolutionSection {
            method: "value-iteration".to_string(),
            iterations: solved.iterations as u64,
            converged: solved.converged,
            residual_sup: solved.residual_sup,
            average_cost: None,
            values: values.clone(),
            policy,
        }),
        residuals: Some(ResidualsSection {
            tcoe: Some(tcoe),
            acoe: None,
            dcoe_min_form: Some(min_form),
            dcoe_policy_form: Some(policy_form),
        }),
        oracle,
        simulation: None,
        golden: None,
        checks,
    };
    let code = exit_from_checks(&rep.checks);
    emit(&rep, output, Some(&values))?;
    Ok(code)
}

fn cmd_reduce_average(
    path: &Path,
    tol: f64,
    beta_flag: Option<f64>,
    ell_flag: Option<&str>,
    oracle_cap: Option<u64>,
    output: &OutputArgs,
) -> Result<u8, CliError> {
    let loaded = load_valid_model(path)?;
    let m = &loaded.mdp;
    if !m.is_row_stochastic(1e-9) {
        return Err(CliError::input(
            "the average-cost pipeline requires a row-stochastic kernel",
        ));
    }
    let ell = resolve_ell(m, ell_flag, loaded.ell)?;
    let bound = compute_mu_ell(m, ell, tol, COMPUTE_MAX_ITER)?;
    let beta = beta_flag.unwrap_or_else(|| bound.min_admissible_beta());
    let dp = hvag_transform(m, ell, &bound.weight, beta)?;
    let solved = value_iteration(&dp, tol, SOLVE_MAX_ITER)?;
    let lifted = lift_average_solution(&dp, &solved.value)?;
    let (min_form, policy_form) = dcoe_residual(&dp, &solved.value, &solved.greedy_policy);
    let acoe = acoe_residual(m, lifted.w, &lifted.h)?;

    let mut checks = vec![
        Check::flag("certified", bound.certified),
        Check::le("rows-stochastic", dp.row_sum_max_defect, ROW_DEFECT_THRESHOLD),
        Check::flag("solver-converged", solved.converged),
        Check::le("acoe-residual", acoe, ACOE_THRESHOLD),
        Check::flag("bias-zero-at-marked", lifted.h[ell] == 0.0),
    ];
    let oracle = match oracle_cap {
        None => None,
        Some(cap) => {
            let result = brute_force_optimum(m, OracleCriterion::AverageCost { ell }, cap, false)?;
            let best = result.best_average.expect("average criterion");
            let gap = (lifted.w - best).abs();
            checks.push(Check::le("oracle-agreement", gap, AVERAGE_ORACLE_GAP));
            Some(OracleSection {
                criterion: "average-cost".to_string(),
                policies_enumerated: result.policies_enumerated,
                best_average: Some(best),
                best_total: None,
                agreement_gap: Some(gap),
                simultaneous_optimum: None,
            })
        }
    };

    let (bias_table, policy) = solution_tables(m, &dp, &solved, &lifted.h);
    let rep = RunReport {
        command: "reduce-average".to_string(),
        model: Some(path.display().to_string()),
        options: OptionsSection {
            tol,
            beta: Some(beta),
            ell: Some(m.state_label(ell).to_string()),
            seed: None,
            oracle_cap,
        },
        validation: Some(validation_section(&loaded.validation)),
        certification: Some(certification_section(m, &bound, false)?),
        transformation: Some(transformation_section(&dp)),
        solution: Some(SolutionSection {
            method: "value-iteration".to_string(),
            iterations: solved.iterations as u64,
            converged: solved.converged,
            residual_sup: solved.residual_sup,
            average_cost: Some(lifted.w),
            values: bias_table.clone(),
            policy,
        }),
        residuals: Some(ResidualsSection {
            tcoe: None,
            acoe: Some(acoe),
            dcoe_min_form: Some(min_form),
            dcoe_policy_form: Some(policy_form),
        }),
        oracle,
        simulation: None,
        golden: None,
        checks,
    };
    let code = exit_from_checks(&rep.checks);
    emit(&rep, output, Some(&bias_table))?;
    Ok(code)
}

fn cmd_solve(path: &Path, beta: f64, tol: f64, output: &OutputArgs) -> Result<u8, CliError> {
    let loaded = load_valid_model(path)?;
    let m = &loaded.mdp;
    let solved = solve_discounted(m, beta, tol, SOLVE_MAX_ITER).map_err(|e| match e {
        SolveError::BadBeta(_) | SolveError::NotContractive(_) => CliError::Input(e.to_string()),
        other => CliError::Pipeline(other.to_string()),
    })?;
    let values: Vec<(String, f64)> = (0..m.n_states())
        .map(|x| (m.state_label(x).to_string(), solved.value[x]))
        .collect();
    let policy = (0..m.n_states())
        .map(|x| {
            (
                m.state_label(x).to_string(),
                m.action_label(x, solved.greedy_policy.action(x)).to_string(),
            )
        })
        .collect();
    let rep = RunReport {
        command: "solve".to_string(),
        model: Some(path.display().to_string()),
        options: OptionsSection {
            tol,
            beta: Some(beta),
            ell: None,
            seed: None,
            oracle_cap: None,
        },
        validation: Some(validation_section(&loaded.validation)),
        certification: None,
        transformation: None,
        solution: Some(SolutionSection {
            method: "value-iteration".to_string(),
            iterations: solved.iterations as u64,
            converged: solved.converged,
            residual_sup: solved.residual_sup,
            average_cost: None,
            values: values.clone(),
            policy,
        }),
        residuals: Some(ResidualsSection {
            tcoe: None,
            acoe: None,
            dcoe_min_form: Some(solved.residual_sup),
            dcoe_policy_form: None,
        }),
        oracle: None,
        simulation: None,
        golden: None,
        checks: vec![Check::flag("solver-converged", solved.converged)],
    };
    let code = exit_from_checks(&rep.checks);
    emit(&rep, output, Some(&values))?;
    Ok(code)
}

fn cmd_oracle(
    path: &Path,
    ell_flag: Option<&str>,
    cap: u64,
    output: &OutputArgs,
) -> Result<u8, CliError> {
    let loaded = load_valid_model(path)?;
    let m = &loaded.mdp;
    let ell = match ell_flag {
        Some(label) => Some(m.state_index(label).ok_or_else(|| {
            CliError::input(format!("--ell references unknown state \"{label}\""))
        })?),
        None => loaded.ell,
    };
    let (section, table) = match ell {
        Some(ell) => {
            let result = brute_force_optimum(m, OracleCriterion::AverageCost { ell }, cap, false)?;
            let section = OracleSection {
                criterion: "average-cost".to_string(),
                policies_enumerated: result.policies_enumerated,
                best_average: result.best_average,
                best_total: None,
                agreement_gap: None,
                simultaneous_optimum: None,
            };
            (section, None)
        }
        None => {
            let result = brute_force_optimum(m, OracleCriterion::TotalCost, cap, false)?;
            let best = result.best_total.as_ref().expect("total criterion");
            let table: Vec<(String, f64)> = (0..m.n_states())
                .map(|x| (m.state_label(x).to_string(), best[x]))
                .collect();
            let section = OracleSection {
                criterion: "total-cost".to_string(),
                policies_enumerated: result.policies_enumerated,
                best_average: None,
                best_total: Some(table.clone()),
                agreement_gap: None,
                simultaneous_optimum: Some(result.simultaneous_optimum),
            };
            (section, Some(table))
        }
    };
    let rep = RunReport {
        command: "oracle".to_string(),
        model: Some(path.display().to_string()),
        options: OptionsSection {
            tol: 0.0,
            beta: None,
            ell: ell.map(|e| m.state_label(e).to_string()),
            seed: None,
            oracle_cap: Some(cap),
        },
        validation: Some(validation_section(&loaded.validation)),
        certification: None,
        transformation: None,
        solution: None,
        residuals: None,
        oracle: Some(section),
        simulation: None,
        golden: None,
        checks: Vec::new(),
    };
    emit(&rep, output, table.as_deref())?;
    Ok(0)
}

/// The built-in inventory showcase: capacity 4, max order 2, unit grid,
/// demand pmf {0:.3, 1:.3, 2:.2, 3:.2}, fixed cost 5, unit cost 1, holding
/// 0.5 per unit.
fn demo_inventory_spec() -> InventorySpec {
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

fn cmd_inventory_demo(seed: u64, output: &OutputArgs) -> Result<u8, CliError> {
    let tol = 1e-8; // weights reach ~1.2e3, so this is what f64 can certify
    let spec = demo_inventory_spec();
    let m = build_inventory_mdp(&spec).map_err(|e| CliError::input(e.to_string()))?;
    let ell = lost_sale_state(&spec);
    let (_, gamma) = check_assumption_d(&spec).map_err(|e| CliError::input(e.to_string()))?;
    let closed_form = k_ell_bound(&spec).map_err(|e| CliError::input(e.to_string()))?;

    let bound = compute_mu_ell(&m, ell, tol, COMPUTE_MAX_ITER)?;
    let certification = certification_section(&m, &bound, true)?;
    let dp = hvag_transform(&m, ell, &bound.weight, bound.min_admissible_beta())?;
    let solved = policy_iteration(&dp, tol)?;
    let lifted = lift_average_solution(&dp, &solved.value)?;
    let acoe = acoe_residual(&m, lifted.w, &lifted.h)?;

    let result = brute_force_optimum(&m, OracleCriterion::AverageCost { ell }, 1_000_000, false)?;
    let oracle_best = result.best_average.expect("average criterion");
    let gap = (lifted.w - oracle_best).abs();

    let policy = dp.restrict_policy(&solved.greedy_policy);
    let (mean, se) =
        simulate_policy(&m, &policy, 0, 100_000, 20, seed).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let deviation = (mean - lifted.w).abs();
    let within = deviation <= 3.0 * se;

    let checks = vec![
        Check::flag("demand-tail-positive", gamma > 0.0),
        Check::flag("certified", bound.certified),
        // The closed-form constant is reported for comparison; it is *not*
        // an upper bound for this demand profile (the certified supremum is
        // 1221.25), so the comparison is informational, not a gate.
        Check::flag(
            "closed-form-constant-dominates",
            bound.sup_weight_ratio <= closed_form,
        ),
        Check::le("rows-stochastic", dp.row_sum_max_defect, ROW_DEFECT_THRESHOLD),
        Check::le("acoe-residual", acoe, ACOE_THRESHOLD),
        Check::le("oracle-agreement", gap, AVERAGE_ORACLE_GAP),
        Check::flag("simulation-within-3se", within),
    ];
    // The informational closed-form comparison does not gate the exit code.
    let gating: Vec<&Check> = checks
        .iter()
        .filter(|c| c.id != "closed-form-constant-dominates")
        .collect();
    let code = if gating.iter().all(|c| c.pass) { 0 } else { 1 };

    let (bias_table, policy_table) = solution_tables(&m, &dp, &solved, &lifted.h);
    let rep = RunReport {
        command: "inventory-demo".to_string(),
        model: Some("builtin:inventory-demo".to_string()),
        options: OptionsSection {
            tol,
            beta: Some(dp.beta),
            ell: Some(m.state_label(ell).to_string()),
            seed: Some(seed),
            oracle_cap: Some(1_000_000),
        },
        validation: Some(validation_section(&validate_model(&m))),
        certification: Some(certification),
        transformation: Some(transformation_section(&dp)),
        solution: Some(SolutionSection {
            method: "policy-iteration".to_string(),
            iterations: solved.iterations as u64,
            converged: solved.converged,
            residual_sup: solved.residual_sup,
            average_cost: Some(lifted.w),
            values: bias_table.clone(),
            policy: policy_table,
        }),
        residuals: Some(ResidualsSection {
            tcoe: None,
            acoe: Some(acoe),
            dcoe_min_form: None,
            dcoe_policy_form: None,
        }),
        oracle: Some(OracleSection {
            criterion: "average-cost".to_string(),
            policies_enumerated: result.policies_enumerated,
            best_average: Some(oracle_best),
            best_total: None,
            agreement_gap: Some(gap),
            simultaneous_optimum: None,
        }),
        simulation: Some(SimulationSection {
            start: m.state_label(0).to_string(),
            horizon: 100_000,
            replications: 20,
            seed,
            mean,
            standard_error: se,
            deviation_from_average_cost: deviation,
            within_three_standard_errors: within,
        }),
        golden: None,
        checks,
    };
    emit(&rep, output, Some(&bias_table))?;
    Ok(code)
}

fn cmd_remark1_demo(output: &OutputArgs) -> Result<u8, CliError> {
    let tol = 1e-12;
    let mut grid: Vec<f64> = (1..=6).map(|i| f64::from(i) / 10.0).collect();
    grid.push(ell_star() - 1e-3);
    let doc = Remark1Doc { interior_grid: grid.clone(), cost: 1.0 };
    let loaded = model_from_doc(&model_file::ModelDoc {
        states: None,
        actions: None,
        kernel: None,
        cost: None,
        v: None,
        ell: None,
        inventory: None,
        remark1: Some(doc),
    })?;
    let m = &loaded.mdp;
    let ell = loaded.ell.expect("generator sets the marked state");

    let bound = compute_mu_ell(m, ell, tol, COMPUTE_MAX_ITER)?;
    let mu = &bound.weight;

    let mut golden_rows = Vec::new();
    let mut worst = 0.0_f64;
    let mut push = |label: String, computed: f64, expected: f64, worst: &mut f64| {
        let err = (computed - expected).abs();
        *worst = worst.max(err);
        golden_rows.push((label, computed, expected, err));
    };
    push("0".to_string(), mu.value(0), 1.0, &mut worst);
    for (i, &x) in grid.iter().enumerate() {
        push(
            m.state_label(i + 1).to_string(),
            mu.value(i + 1),
            1.0 / (1.0 - x),
            &mut worst,
        );
    }
    push(
        "ell".to_string(),
        mu.value(ell),
        (5.0_f64.sqrt() + 1.0) / 2.0,
        &mut worst,
    );
    let gap = mu.value(grid.len()) - mu.value(ell);

    let weight_table: Vec<(String, f64)> = (0..m.n_states())
        .map(|x| (m.state_label(x).to_string(), mu.value(x)))
        .collect();
    let rep = RunReport {
        command: "remark1-demo".to_string(),
        model: Some("builtin:remark1-demo".to_string()),
        options: OptionsSection {
            tol,
            beta: None,
            ell: Some("ell".to_string()),
            seed: None,
            oracle_cap: None,
        },
        validation: Some(validation_section(&loaded.validation)),
        certification: Some(certification_section(m, &bound, true)?),
        transformation: None,
        solution: None,
        residuals: None,
        oracle: None,
        simulation: None,
        golden: Some(GoldenSection {
            values: golden_rows,
            worst_error: worst,
            discontinuity_gap: gap,
        }),
        checks: vec![
            Check::le("golden-values", worst, 1e-10),
            Check {
                id: "discontinuity-gap".to_string(),
                pass: gap >= 0.9,
                value: gap,
                threshold: Some(0.9),
            },
        ],
    };
    let code = exit_from_checks(&rep.checks);
    emit(&rep, output, Some(&weight_table))?;
    Ok(code)
}
