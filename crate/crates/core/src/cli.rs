//! `lds-id` command-line interface.
//!
//! Exit codes: 0 success, 2 parameter/domain error, 3 schema/input error,
//! 4 solver divergence, 5 an experiment grid point where every trial failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    random_stable_matrix, simulate, LdsModel, NoiseFamily, NoiseSpec, TrajectoryDocument,
};
use crate::error::Error;
use crate::estimators::{
    build_data_matrices, check_first_order_inequality, constrained_ls, ols, ConstraintSet,
    EstimateDocument, SolverConfig, StepRule, FIRST_ORDER_TOL_REL,
};
use crate::exec::{with_thread_cap, Execution};
use crate::experiments::{run_plan_with, write_outputs, ExperimentPlan, ExperimentSummary};
use crate::geometry::{
    gaussian_width_mc, ComplexityReport, ComplexityScenario, TangentConeDescriptor,
};
use crate::json;
use crate::linalg::{self, l1_norm};
use crate::rng::derive_seed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARAMETER: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;
pub const EXIT_SWEEP_FAILED: i32 = 5;

/// Environment variable capping the experiment worker count.
pub const THREADS_ENV: &str = "LDS_ID_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "lds-id",
    version,
    about = "Identify stable linear dynamical systems by constrained least squares"
)]
pub struct Cli {
    /// JSON file with parameters for the subcommand; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (or directory for `experiment`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a trajectory from a given or random stable system.
    Simulate(SimulateArgs),
    /// Estimate A* from a trajectory file.
    Estimate(EstimateArgs),
    /// Evaluate complexity quantities and the error bound.
    Complexity(ComplexityArgs),
    /// Run a Monte-Carlo sweep described by a plan file.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "T")]
    horizon: Option<usize>,
    /// Spectral norm of the random system matrix.
    #[arg(long = "spec-norm")]
    spec_norm: Option<f64>,
    /// Number of nonzero entries of the random system matrix.
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long)]
    noise: Option<NoiseFamily>,
    /// JSON file holding `A` (row-major) and optionally `n`.
    #[arg(long = "a-file")]
    a_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Trajectory JSON written by `simulate`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// `ols`, `unconstrained`, `subspace:<basis.json>`, `l1:<radius>` or `l1:oracle`.
    #[arg(long)]
    constraint: Option<String>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long = "grad-map-tol")]
    grad_map_tol: Option<f64>,
    /// `lipschitz`, `fixed:<eta>` or `backtracking:<beta>,<c>`.
    #[arg(long)]
    step: Option<String>,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    /// `subspace` or `sparse`.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Horizons at which to tabulate the bound, comma separated.
    #[arg(long = "T", value_delimiter = ',')]
    horizons: Vec<usize>,
    /// JSON file with `A`; J is computed from it instead of assumed to be 1.
    #[arg(long = "a-file")]
    a_file: Option<PathBuf>,
    /// Monte-Carlo samples for the Gaussian width (0 or absent to skip).
    #[arg(long = "width-samples")]
    width_samples: Option<usize>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Plan JSON (same as `--config`).
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Worker cap; overrides the LDS_ID_THREADS environment variable.
    #[arg(long)]
    threads: Option<usize>,
}

/// Error carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Divergence { .. } => EXIT_DIVERGENCE,
            Error::Schema(_)
            | Error::Json(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::UnsupportedCheck(_) => EXIT_SCHEMA,
            Error::Dimension(_)
            | Error::Instability { .. }
            | Error::Parameter(_)
            | Error::Resource(_)
            | Error::Integration(_)
            | Error::InsufficientData(_) => EXIT_PARAMETER,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() {
                EXIT_PARAMETER
            } else {
                EXIT_OK
            };
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => cmd_simulate(&cli, a, stdout),
        Command::Estimate(a) => cmd_estimate(&cli, a, stdout),
        Command::Complexity(a) => cmd_complexity(&cli, a, stdout),
        Command::Experiment(a) => cmd_experiment(&cli, a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_SCHEMA, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| fail(EXIT_SCHEMA, format!("{}: {e}", path.display())))
}

/// Loads the `--config` file as `T` (all fields optional) or defaults.
fn load_config<T: DeserializeOwned + Default>(cli: &Cli) -> CliResult<T> {
    cli.config
        .as_deref()
        .map(read_json)
        .transpose()
        .map(Option::unwrap_or_default)
}

fn require<T>(value: Option<T>, name: &str) -> CliResult<T> {
    value.ok_or_else(|| {
        fail(
            EXIT_PARAMETER,
            format!("missing required parameter '{name}'"),
        )
    })
}

fn to_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

#[derive(Debug, Deserialize)]
struct MatrixFile {
    #[serde(default)]
    n: Option<usize>,
    #[serde(rename = "A")]
    a: Vec<f64>,
}

fn read_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let file: MatrixFile = read_json(path)?;
    let a = match file.n {
        Some(n) => linalg::from_row_major(n, n, &file.a),
        None => linalg::square_from_row_major(&file.a),
    };
    a.map_err(|e| fail(EXIT_SCHEMA, format!("{}: {e}", path.display())))
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    n: Option<usize>,
    #[serde(rename = "T")]
    horizon: Option<usize>,
    seed: Option<u64>,
    spec_norm: Option<f64>,
    sparsity: Option<usize>,
    noise: Option<NoiseFamily>,
    a_file: Option<PathBuf>,
    out: Option<PathBuf>,
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let mut cfg: SimulateConfig = load_config(cli)?;
    cfg.n = args.n.or(cfg.n);
    cfg.horizon = args.horizon.or(cfg.horizon);
    cfg.seed = cli.seed.or(cfg.seed).or(Some(0));
    cfg.spec_norm = args.spec_norm.or(cfg.spec_norm);
    cfg.sparsity = args.sparsity.or(cfg.sparsity);
    cfg.noise = args.noise.or(cfg.noise).or(Some(NoiseFamily::Gaussian));
    cfg.a_file = args.a_file.clone().or(cfg.a_file);
    cfg.out = cli
        .out
        .clone()
        .or(cfg.out)
        .or_else(|| Some("trajectory.json".into()));

    let seed = cfg.seed.unwrap_or_default();
    let horizon = require(cfg.horizon, "T")?;
    let a = match &cfg.a_file {
        Some(path) => {
            let a = read_matrix(path)?;
            if cfg.n.is_some_and(|n| n != a.nrows()) {
                return Err(fail(
                    EXIT_PARAMETER,
                    format!(
                        "--n disagrees with the {}x{} matrix in the A file",
                        a.nrows(),
                        a.nrows()
                    ),
                ));
            }
            cfg.n = Some(a.nrows());
            a
        }
        None => {
            let n = require(cfg.n, "n")?;
            let spec_norm = require(cfg.spec_norm, "spec-norm")?;
            random_stable_matrix(n, spec_norm, cfg.sparsity, seed)?
        }
    };
    let model = LdsModel::new(a)?;
    if !model.is_stable() {
        return Err(fail(
            EXIT_PARAMETER,
            format!(
                "A* is not strictly stable: spectral radius {} >= 1",
                model.spectral_radius()
            ),
        ));
    }
    let noise = NoiseSpec::new(cfg.noise.unwrap_or_default());
    let traj = simulate(&model, noise, horizon, derive_seed(seed, &[1]))?;
    let mut doc = TrajectoryDocument::new(&model, &traj, seed, noise);
    doc.config = Some(to_value(&cfg));
    let out = cfg.out.clone().expect("defaulted");
    json::write_pretty(&out, &doc)?;
    writeln!(stdout, "n = {}", model.dim()).ok();
    writeln!(stdout, "T = {horizon}").ok();
    writeln!(
        stdout,
        "spectral_radius = {}",
        json::fmt_f64(model.spectral_radius())
    )
    .ok();
    writeln!(stdout, "J = {}", json::fmt_f64(model.j())).ok();
    writeln!(stdout, "wrote {}", out.display()).ok();
    Ok(EXIT_OK)
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateConfig {
    input: Option<PathBuf>,
    constraint: Option<String>,
    max_iters: Option<usize>,
    grad_map_tol: Option<f64>,
    step: Option<String>,
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisFile {
    n: usize,
    basis: Vec<Vec<f64>>,
    #[serde(default)]
    offset: Option<Vec<f64>>,
}

fn read_subspace(path: &Path) -> CliResult<ConstraintSet> {
    let file: BasisFile = read_json(path)?;
    let schema = |e: Error| fail(EXIT_SCHEMA, format!("{}: {e}", path.display()));
    let basis = file
        .basis
        .iter()
        .map(|b| linalg::from_row_major(file.n, file.n, b))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(schema)?;
    let offset = match &file.offset {
        Some(o) => linalg::from_row_major(file.n, file.n, o).map_err(schema)?,
        None => DMatrix::zeros(file.n, file.n),
    };
    ConstraintSet::subspace(basis, offset).map_err(schema)
}

fn parse_step(spec: &str) -> CliResult<StepRule> {
    let bad = || fail(EXIT_PARAMETER, format!("invalid step rule '{spec}'"));
    if spec == "lipschitz" {
        return Ok(StepRule::Lipschitz);
    }
    if let Some(eta) = spec.strip_prefix("fixed:") {
        return Ok(StepRule::Fixed {
            eta: eta.parse().map_err(|_| bad())?,
        });
    }
    if let Some(rest) = spec.strip_prefix("backtracking:") {
        let (beta, c) = rest.split_once(',').ok_or_else(bad)?;
        return Ok(StepRule::Backtracking {
            beta: beta.parse().map_err(|_| bad())?,
            c: c.parse().map_err(|_| bad())?,
        });
    }
    Err(bad())
}

fn cmd_estimate(cli: &Cli, args: &EstimateArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let mut cfg: EstimateConfig = load_config(cli)?;
    cfg.input = args.input.clone().or(cfg.input);
    cfg.constraint = args
        .constraint
        .clone()
        .or(cfg.constraint)
        .or_else(|| Some("ols".into()));
    cfg.max_iters = args.max_iters.or(cfg.max_iters);
    cfg.grad_map_tol = args.grad_map_tol.or(cfg.grad_map_tol);
    cfg.step = args.step.clone().or(cfg.step);
    cfg.out = cli
        .out
        .clone()
        .or(cfg.out)
        .or_else(|| Some("estimate.json".into()));

    let input = require(cfg.input.clone(), "input")?;
    let doc: TrajectoryDocument = read_json(&input)?;
    let schema = |e: Error| fail(EXIT_SCHEMA, format!("{}: {e}", input.display()));
    let traj = doc.trajectory().map_err(schema)?;
    let a_star = doc.system_matrix().map_err(schema)?;
    let data = build_data_matrices(&traj)?;

    let mut solver = SolverConfig::default();
    if let Some(m) = cfg.max_iters {
        solver.max_iters = m;
    }
    solver.grad_map_tol = cfg.grad_map_tol;
    if let Some(step) = &cfg.step {
        solver.step_rule = parse_step(step)?;
    }
    solver.validate()?;

    let spec = cfg.constraint.clone().expect("defaulted");
    let (constraint, closed_form) = match spec.as_str() {
        "ols" => (ConstraintSet::Unconstrained, true),
        "unconstrained" => (ConstraintSet::Unconstrained, false),
        s if s.starts_with("subspace:") => {
            (read_subspace(Path::new(&s["subspace:".len()..]))?, false)
        }
        "l1:oracle" => {
            let a = a_star
                .as_ref()
                .ok_or_else(|| fail(EXIT_SCHEMA, "l1:oracle needs A* in the trajectory file"))?;
            (ConstraintSet::l1_ball(l1_norm(a))?, false)
        }
        s if s.starts_with("l1:") => {
            let radius: f64 = s["l1:".len()..]
                .parse()
                .map_err(|_| fail(EXIT_PARAMETER, format!("invalid l1 radius in '{s}'")))?;
            (ConstraintSet::l1_ball(radius)?, false)
        }
        other => {
            return Err(fail(
                EXIT_PARAMETER,
                format!("unknown constraint '{other}'"),
            ))
        }
    };
    if let ConstraintSet::Subspace(s) = &constraint {
        if s.n() != data.n() {
            return Err(fail(
                EXIT_SCHEMA,
                format!(
                    "basis is for n = {}, trajectory has n = {}",
                    s.n(),
                    data.n()
                ),
            ));
        }
        if s.nearly_dependent() {
            writeln!(
                stdout,
                "warning: subspace basis is nearly linearly dependent"
            )
            .ok();
        }
    }

    let result = if closed_form {
        ols(&data)
    } else {
        constrained_ls(&data, &constraint, &solver)?
    };
    let mut out_doc = EstimateDocument::new(&result, &constraint);
    if closed_form {
        out_doc.constraint = "ols".into();
    }
    writeln!(stdout, "objective = {}", json::fmt_f64(result.objective)).ok();
    writeln!(stdout, "iterations = {}", result.iterations).ok();
    writeln!(stdout, "converged = {}", result.converged).ok();
    if let Some(a) = &a_star {
        let err = (&result.a_hat - a).norm();
        out_doc.err_frobenius = Some(err);
        writeln!(stdout, "err_fro = {}", json::fmt_f64(err)).ok();
        if data.e.is_some() {
            let b = constraint.project(a);
            let rep =
                check_first_order_inequality(&result.a_hat, &b, a, &data, FIRST_ORDER_TOL_REL)?;
            writeln!(stdout, "first_order_slack = {}", json::fmt_f64(rep.slack)).ok();
            if rep.violated {
                writeln!(stdout, "warning: first-order inequality violated").ok();
            }
            out_doc.first_order = Some(rep);
        }
    }
    out_doc.config = Some(to_value(&cfg));
    let out = cfg.out.expect("defaulted");
    json::write_pretty(&out, &out_doc)?;
    writeln!(stdout, "wrote {}", out.display()).ok();
    Ok(EXIT_OK)
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexityConfig {
    scenario: Option<String>,
    n: Option<usize>,
    d: Option<usize>,
    k: Option<usize>,
    delta: Option<f64>,
    #[serde(rename = "T", default)]
    horizons: Vec<usize>,
    a_file: Option<PathBuf>,
    width_samples: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ComplexityOutput<'a> {
    #[serde(flatten)]
    report: &'a ComplexityReport,
    config: serde_json::Value,
}

fn cmd_complexity(cli: &Cli, args: &ComplexityArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let mut cfg: ComplexityConfig = load_config(cli)?;
    cfg.scenario = args.scenario.clone().or(cfg.scenario);
    cfg.n = args.n.or(cfg.n);
    cfg.d = args.d.or(cfg.d);
    cfg.k = args.k.or(cfg.k);
    cfg.delta = args.delta.or(cfg.delta).or(Some(0.05));
    if !args.horizons.is_empty() {
        cfg.horizons = args.horizons.clone();
    }
    cfg.a_file = args.a_file.clone().or(cfg.a_file);
    cfg.width_samples = args.width_samples.or(cfg.width_samples);
    cfg.seed = cli.seed.or(cfg.seed).or(Some(0));
    cfg.out = cli
        .out
        .clone()
        .or(cfg.out)
        .or_else(|| Some("complexity.json".into()));

    let delta = cfg.delta.expect("defaulted");
    if !(delta > 0.0 && delta < 1.0) {
        return Err(fail(
            EXIT_PARAMETER,
            format!("delta must lie in (0, 1), got {delta}"),
        ));
    }
    let a = cfg.a_file.as_deref().map(read_matrix).transpose()?;
    let n = match (&a, cfg.n) {
        (Some(a), Some(n)) if a.nrows() != n => {
            return Err(fail(
                EXIT_PARAMETER,
                format!("--n = {n} but the A file is {}x{}", a.nrows(), a.nrows()),
            ));
        }
        (Some(a), _) => a.nrows(),
        (None, n) => require(n, "n")?,
    };
    let j = match &a {
        Some(a) => LdsModel::new(a.clone())?.j(),
        None => 1.0,
    };
    if !j.is_finite() {
        return Err(fail(
            EXIT_PARAMETER,
            "A* is not strictly stable, J is infinite",
        ));
    }
    let scenario_name = require(cfg.scenario.clone(), "scenario")?;
    let (scenario, cone) = match scenario_name.as_str() {
        "subspace" => {
            let d = require(cfg.d, "d")?;
            (
                ComplexityScenario::Subspace { n, d },
                TangentConeDescriptor::subspace(d)?,
            )
        }
        "sparse" => {
            let k = match (&a, cfg.k) {
                (_, Some(k)) => k,
                (Some(a), None) => a.iter().filter(|&&x| x != 0.0).count(),
                (None, None) => require(None, "k")?,
            };
            let cone = match &a {
                Some(a) if a.iter().filter(|&&x| x != 0.0).count() == k => {
                    TangentConeDescriptor::l1_descent_at(a)?
                }
                // The width only depends on (n, k): any support and signs will do.
                _ => TangentConeDescriptor::l1_descent(n, (0..k).collect(), vec![1.0; k])?,
            };
            (ComplexityScenario::Sparse { n, k }, cone)
        }
        other => return Err(fail(EXIT_PARAMETER, format!("unknown scenario '{other}'"))),
    };
    let mut report = ComplexityReport::new(scenario, j, delta, &cfg.horizons)?;
    if let Some(samples) = cfg.width_samples.filter(|&s| s > 0) {
        report = report.with_width(gaussian_width_mc(
            &cone,
            samples,
            cfg.seed.unwrap_or_default(),
        )?);
    }
    writeln!(stdout, "J = {}", json::fmt_f64(j)).ok();
    writeln!(
        stdout,
        "T_min ~ {} (up to constants)",
        json::fmt_f64(report.t_min.value)
    )
    .ok();
    for row in &report.error_bound {
        writeln!(
            stdout,
            "T = {}: error bound ~ {}",
            row.horizon,
            json::fmt_f64(row.error_bound.value)
        )
        .ok();
    }
    if let Some(w) = &report.width_mc {
        writeln!(
            stdout,
            "gaussian width ~ {} +/- {}",
            json::fmt_f64(w.mean),
            json::fmt_f64(w.std_err)
        )
        .ok();
    }
    let out = cfg.out.clone().expect("defaulted");
    json::write_pretty(
        &out,
        &ComplexityOutput {
            report: &report,
            config: to_value(&cfg),
        },
    )?;
    writeln!(stdout, "wrote {}", out.display()).ok();
    Ok(EXIT_OK)
}

fn thread_cap(flag: Option<usize>) -> CliResult<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(Some).map_err(|_| {
            fail(
                EXIT_PARAMETER,
                format!("{THREADS_ENV} must be a positive integer, got '{v}'"),
            )
        }),
        Err(_) => Ok(None),
    }
}

fn cmd_experiment(cli: &Cli, args: &ExperimentArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let path = args
        .plan
        .clone()
        .or_else(|| cli.config.clone())
        .ok_or_else(|| fail(EXIT_PARAMETER, "experiment needs --plan or --config"))?;
    let mut plan: ExperimentPlan = read_json(&path)?;
    if let Some(seed) = cli.seed {
        plan.base_seed = seed;
    }
    plan.validate()
        .map_err(|e| fail(EXIT_SCHEMA, e.to_string()))?;
    let threads = thread_cap(args.threads)?;
    let records = with_thread_cap(threads, || run_plan_with(&plan, Execution::default()))?;
    let summary = ExperimentSummary::new(&plan, &records)?;
    let out = cli.out.clone().unwrap_or_else(|| "experiment_out".into());
    write_outputs(&out, &summary, &records)?;
    writeln!(
        stdout,
        "records = {} (failed {})",
        summary.total_records, summary.failed_records
    )
    .ok();
    for (name, fits) in &summary.slopes {
        for f in fits {
            let group: Vec<String> = f.group.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(
                stdout,
                "{name} [{}]: slope = {:.4}, r2 = {:.4}",
                group.join(", "),
                f.fit.slope,
                f.fit.r_squared
            )
            .ok();
        }
    }
    writeln!(stdout, "wrote {}", out.display()).ok();
    if summary.grid_points_all_failed > 0 {
        writeln!(
            stdout,
            "{} grid point(s) had every trial fail",
            summary.grid_points_all_failed
        )
        .ok();
        return Ok(EXIT_SWEEP_FAILED);
    }
    Ok(EXIT_OK)
}
