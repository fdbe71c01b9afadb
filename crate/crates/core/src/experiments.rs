//! Monte-Carlo sweeps over `(n, d|k, T, trial)`, log-log slope fits, and
//! CSV / JSON-lines / summary output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{random_stable_matrix, simulate, LdsModel, NoiseFamily, NoiseSpec};
use crate::error::{Error, Result};
use crate::estimators::{
    build_data_matrices, constrained_ls, ols, ConstraintSet, SolverConfig, SubspaceSet,
};
use crate::exec::Execution;
use crate::json;
use crate::linalg::{add_scaled, l1_norm, spectral_norm};
use crate::rng::{derive_seed, rng_from_seed};

/// Column order of the records CSV.
pub const CSV_HEADER: [&str; 12] = [
    "scenario",
    "n",
    "T",
    "d_or_k",
    "trial_seed",
    "err_fro",
    "err_spec",
    "err_ols_fro",
    "objective",
    "iterations",
    "wall_time_ms",
    "failed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// `A*` inside a random d-dimensional subspace, `K` = that subspace.
    Subspace,
    /// k-sparse `A*`, `K = ‖A*‖_{1,1}·B₁`.
    Sparse,
    /// Dense `A*`, no constraint.
    Unconstrained,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Subspace => "subspace",
            Scenario::Sparse => "sparse",
            Scenario::Unconstrained => "unconstrained",
        }
    }
}

/// A sweep description. The grid is the Cartesian product
/// `n_grid × (d_grid | k_grid) × T_grid`, each point run `trials` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub scenario: Scenario,
    pub n_grid: Vec<usize>,
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub d_grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k_grid: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub noise: NoiseFamily,
    pub target_spec_norm: f64,
    pub base_seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Measure solver wall time. Off by default so that output files are a
    /// pure function of the plan; when off, `wall_time_ms` is written as 0.
    #[serde(default)]
    pub record_timing: bool,
}

fn check_grid(name: &str, grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Schema(format!("{name} must be non-empty")));
    }
    if grid[0] == 0 {
        return Err(Error::Schema(format!("{name} entries must be positive")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Schema(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        check_grid("n_grid", &self.n_grid)?;
        check_grid("T_grid", &self.t_grid)?;
        let max_n2 = self.n_grid[0] * self.n_grid[0];
        match self.scenario {
            Scenario::Subspace => {
                check_grid("d_grid", &self.d_grid)?;
                if self.d_grid.last().is_some_and(|&d| d > max_n2) {
                    return Err(Error::Schema(format!("d_grid exceeds n^2 = {max_n2}")));
                }
            }
            Scenario::Sparse => {
                check_grid("k_grid", &self.k_grid)?;
                if self.k_grid.last().is_some_and(|&k| k > max_n2) {
                    return Err(Error::Schema(format!("k_grid exceeds n^2 = {max_n2}")));
                }
            }
            Scenario::Unconstrained => {}
        }
        if self.trials == 0 {
            return Err(Error::Schema("trials must be at least 1".into()));
        }
        if !(self.target_spec_norm > 0.0 && self.target_spec_norm < 1.0) {
            return Err(Error::Schema(format!(
                "target_spec_norm must lie in (0, 1), got {}",
                self.target_spec_norm
            )));
        }
        self.solver
            .validate()
            .map_err(|e| Error::Schema(format!("solver: {e}")))
    }

    /// Structural parameter values (`d` or `k`); the unconstrained scenario
    /// uses a single placeholder so the grid shape stays uniform.
    fn params(&self, n: usize) -> Vec<usize> {
        match self.scenario {
            Scenario::Subspace => self.d_grid.clone(),
            Scenario::Sparse => self.k_grid.clone(),
            Scenario::Unconstrained => vec![n * n],
        }
    }
}

/// One `(configuration, trial)` measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub scenario: Scenario,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub d_or_k: usize,
    pub trial_seed: u64,
    /// `‖Â − A*‖_F` of the constrained estimate (NaN when failed).
    pub err_fro: f64,
    pub err_spec: f64,
    /// `‖Â_OLS − A*‖_F` on the same trajectory.
    pub err_ols_fro: f64,
    pub objective: f64,
    pub iterations: usize,
    pub wall_time_ms: f64,
    pub failed: bool,
}

impl ExperimentRecord {
    fn csv_row(&self) -> [String; 12] {
        [
            self.scenario.as_str().to_string(),
            self.n.to_string(),
            self.horizon.to_string(),
            self.d_or_k.to_string(),
            self.trial_seed.to_string(),
            json::fmt_f64(self.err_fro),
            json::fmt_f64(self.err_spec),
            json::fmt_f64(self.err_ols_fro),
            json::fmt_f64(self.objective),
            self.iterations.to_string(),
            json::fmt_f64(self.wall_time_ms),
            self.failed.to_string(),
        ]
    }
}

/// A `(n, d|k)` configuration with its system matrix source.
struct Configuration {
    n: usize,
    param: usize,
    indices: (usize, usize),
    /// Subspace scenario: fixed `K` and `A*` shared by every T and trial.
    subspace: Option<(SubspaceSet, DMatrix<f64>)>,
}

struct WorkItem {
    config: usize,
    t_index: usize,
    horizon: usize,
    trial: usize,
}

fn random_subspace_system(
    n: usize,
    d: usize,
    target: f64,
    seed: u64,
) -> Result<(SubspaceSet, DMatrix<f64>)> {
    let mut rng = rng_from_seed(seed);
    let basis: Vec<DMatrix<f64>> = (0..d)
        .map(|_| DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    let set = SubspaceSet::new(basis, DMatrix::zeros(n, n))?;
    let mut a = DMatrix::zeros(n, n);
    for v in set.basis() {
        let c: f64 = StandardNormal.sample(&mut rng);
        add_scaled(&mut a, c, v);
    }
    let norm = spectral_norm(&a);
    a *= target / norm;
    Ok((set, a))
}

/// Runs the sweep with the default execution strategy.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<ExperimentRecord>> {
    run_plan_with(plan, Execution::default())
}

/// Runs every `(grid point, trial)` and returns records in canonical order
/// (`n`, then `d|k`, then `T`, then trial), independent of scheduling.
///
/// Seeds: the subspace system at `(n, d)` comes from
/// `derive(base, [n_idx, p_idx])`; sparse/dense `A*` for a trial from
/// `derive(base, [n_idx, p_idx, u64::MAX, trial])`, so the same trial index
/// sees the same `A*` at every T; the noise seed recorded as `trial_seed` is
/// `derive(base, [n_idx, p_idx, t_idx, trial])`.
pub fn run_plan_with(plan: &ExperimentPlan, exec: Execution) -> Result<Vec<ExperimentRecord>> {
    plan.validate()?;
    let mut configs = Vec::new();
    for (ni, &n) in plan.n_grid.iter().enumerate() {
        for (pi, &param) in plan.params(n).iter().enumerate() {
            if param > n * n {
                return Err(Error::Schema(format!(
                    "d|k = {param} exceeds n^2 = {} for n = {n}",
                    n * n
                )));
            }
            let subspace = match plan.scenario {
                Scenario::Subspace => Some(random_subspace_system(
                    n,
                    param,
                    plan.target_spec_norm,
                    derive_seed(plan.base_seed, &[ni as u64, pi as u64]),
                )?),
                _ => None,
            };
            configs.push(Configuration {
                n,
                param,
                indices: (ni, pi),
                subspace,
            });
        }
    }
    let mut work = Vec::new();
    for (ci, _) in configs.iter().enumerate() {
        for (ti, &horizon) in plan.t_grid.iter().enumerate() {
            for trial in 0..plan.trials {
                work.push(WorkItem {
                    config: ci,
                    t_index: ti,
                    horizon,
                    trial,
                });
            }
        }
    }
    exec.map_slice(&work, |item| run_trial(plan, &configs[item.config], item))
        .into_iter()
        .collect()
}

fn run_trial(
    plan: &ExperimentPlan,
    config: &Configuration,
    item: &WorkItem,
) -> Result<ExperimentRecord> {
    let (ni, pi) = config.indices;
    let n = config.n;
    let trial_seed = derive_seed(
        plan.base_seed,
        &[ni as u64, pi as u64, item.t_index as u64, item.trial as u64],
    );
    let system_seed = derive_seed(
        plan.base_seed,
        &[ni as u64, pi as u64, u64::MAX, item.trial as u64],
    );
    let (a_star, constraint) = match (&config.subspace, plan.scenario) {
        (Some((set, a)), _) => (a.clone(), ConstraintSet::Subspace(set.clone())),
        (None, Scenario::Sparse) => {
            let a =
                random_stable_matrix(n, plan.target_spec_norm, Some(config.param), system_seed)?;
            let radius = l1_norm(&a);
            (a, ConstraintSet::l1_ball(radius)?)
        }
        (None, _) => (
            random_stable_matrix(n, plan.target_spec_norm, None, system_seed)?,
            ConstraintSet::Unconstrained,
        ),
    };
    let model = LdsModel::new(a_star)?;
    let traj = simulate(&model, NoiseSpec::new(plan.noise), item.horizon, trial_seed)?;
    let data = build_data_matrices(&traj)?;

    let started = Instant::now();
    let solved = constrained_ls(&data, &constraint, &plan.solver);
    let wall_time_ms = if plan.record_timing {
        started.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let baseline = ols(&data);
    let a_star = model.matrix();
    let err_ols_fro = (&baseline.a_hat - a_star).norm();
    let mut record = ExperimentRecord {
        scenario: plan.scenario,
        n,
        horizon: item.horizon,
        d_or_k: config.param,
        trial_seed,
        err_fro: f64::NAN,
        err_spec: f64::NAN,
        err_ols_fro,
        objective: f64::NAN,
        iterations: 0,
        wall_time_ms,
        failed: true,
    };
    match solved {
        Ok(res) => {
            let diff = &res.a_hat - a_star;
            record.err_fro = diff.norm();
            record.err_spec = spectral_norm(&diff);
            record.objective = res.objective;
            record.iterations = res.iterations;
            record.failed = false;
        }
        Err(Error::Divergence { iteration, .. }) => {
            record.iterations = iteration;
        }
        Err(e) => return Err(e),
    }
    Ok(record)
}

/// Numeric record columns usable as axes or grouping keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordField {
    N,
    #[serde(rename = "T")]
    Horizon,
    DOrK,
    ErrFro,
    ErrSpec,
    ErrOlsFro,
    Objective,
    Iterations,
    WallTimeMs,
}

impl RecordField {
    pub fn get(self, r: &ExperimentRecord) -> f64 {
        match self {
            RecordField::N => r.n as f64,
            RecordField::Horizon => r.horizon as f64,
            RecordField::DOrK => r.d_or_k as f64,
            RecordField::ErrFro => r.err_fro,
            RecordField::ErrSpec => r.err_spec,
            RecordField::ErrOlsFro => r.err_ols_fro,
            RecordField::Objective => r.objective,
            RecordField::Iterations => r.iterations as f64,
            RecordField::WallTimeMs => r.wall_time_ms,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RecordField::N => "n",
            RecordField::Horizon => "T",
            RecordField::DOrK => "d_or_k",
            RecordField::ErrFro => "err_fro",
            RecordField::ErrSpec => "err_spec",
            RecordField::ErrOlsFro => "err_ols_fro",
            RecordField::Objective => "objective",
            RecordField::Iterations => "iterations",
            RecordField::WallTimeMs => "wall_time_ms",
        }
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `ln y = slope·ln x + intercept` to the given points.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LineFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 distinct x values, got {}",
            xs.len()
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Parameter(
            "log-log fit needs positive x and y".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Median of a non-empty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Slope fit for one group of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Values of the `group_by` fields identifying the group.
    pub group: BTreeMap<String, f64>,
    #[serde(flatten)]
    pub fit: LineFit,
    /// `(x, median y)` pairs that were fitted.
    pub points: Vec<(f64, f64)>,
    /// Failed records skipped in this group.
    pub excluded_failures: usize,
}

/// Groups records by `group_by`, takes the median of `y_field` over trials
/// at each distinct `x_field`, and fits a line in log-log space. Failed
/// records are excluded (and counted).
pub fn fit_loglog_slope(
    records: &[ExperimentRecord],
    x_field: RecordField,
    y_field: RecordField,
    group_by: &[RecordField],
) -> Result<Vec<SlopeFit>> {
    type Key = Vec<u64>;
    let mut groups: BTreeMap<Key, (BTreeMap<u64, Vec<f64>>, usize)> = BTreeMap::new();
    for r in records {
        let key: Key = group_by.iter().map(|f| f.get(r).to_bits()).collect();
        let entry = groups.entry(key).or_default();
        if r.failed {
            entry.1 += 1;
            continue;
        }
        entry
            .0
            .entry(x_field.get(r).to_bits())
            .or_default()
            .push(y_field.get(r));
    }
    let mut fits = Vec::with_capacity(groups.len());
    for (key, (by_x, excluded_failures)) in groups {
        let mut points: Vec<(f64, f64)> = by_x
            .into_iter()
            .map(|(x, ys)| (f64::from_bits(x), median(&ys)))
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let fit = fit_loglog(&points)?;
        let group = group_by
            .iter()
            .zip(&key)
            .map(|(f, &bits)| (f.name().to_string(), f64::from_bits(bits)))
            .collect();
        fits.push(SlopeFit {
            group,
            fit,
            points,
            excluded_failures,
        });
    }
    Ok(fits)
}

/// Per-grid-point aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n: usize,
    pub d_or_k: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub trials: usize,
    pub failed: usize,
    pub median_err_fro: Option<f64>,
    pub median_err_spec: Option<f64>,
    pub median_err_ols_fro: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub plan: ExperimentPlan,
    pub total_records: usize,
    pub failed_records: usize,
    /// Grid points at which every trial failed.
    pub grid_points_all_failed: usize,
    pub grid: Vec<GridSummary>,
    /// Keyed by `<y>_vs_<x>`, e.g. `err_fro_vs_T`.
    pub slopes: BTreeMap<String, Vec<SlopeFit>>,
}

impl ExperimentSummary {
    pub fn new(plan: &ExperimentPlan, records: &[ExperimentRecord]) -> Result<Self> {
        let mut grid: BTreeMap<(usize, usize, usize), Vec<&ExperimentRecord>> = BTreeMap::new();
        for r in records {
            grid.entry((r.n, r.d_or_k, r.horizon)).or_default().push(r);
        }
        let grid: Vec<GridSummary> = grid
            .into_iter()
            .map(|((n, d_or_k, horizon), rs)| {
                let ok: Vec<&&ExperimentRecord> = rs.iter().filter(|r| !r.failed).collect();
                let med = |f: fn(&ExperimentRecord) -> f64| {
                    (!ok.is_empty()).then(|| median(&ok.iter().map(|r| f(r)).collect::<Vec<_>>()))
                };
                GridSummary {
                    n,
                    d_or_k,
                    horizon,
                    trials: rs.len(),
                    failed: rs.len() - ok.len(),
                    median_err_fro: med(|r| r.err_fro),
                    median_err_spec: med(|r| r.err_spec),
                    median_err_ols_fro: median(
                        &rs.iter().map(|r| r.err_ols_fro).collect::<Vec<_>>(),
                    ),
                }
            })
            .collect();
        let mut slopes = BTreeMap::new();
        let mut add = |x: RecordField, group: &[RecordField]| -> Result<()> {
            for y in [RecordField::ErrFro, RecordField::ErrOlsFro] {
                // Groups where every trial failed have nothing to fit.
                let usable: Vec<ExperimentRecord> = records
                    .iter()
                    .filter(|r| !r.failed || y == RecordField::ErrOlsFro)
                    .cloned()
                    .collect();
                match fit_loglog_slope(&usable, x, y, group) {
                    Ok(fits) => {
                        slopes.insert(format!("{}_vs_{}", y.name(), x.name()), fits);
                    }
                    Err(Error::InsufficientData(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(())
        };
        if plan.t_grid.len() >= 2 {
            add(RecordField::Horizon, &[RecordField::N, RecordField::DOrK])?;
        }
        let params = plan.params(plan.n_grid[0]);
        if params.len() >= 2 && plan.scenario != Scenario::Unconstrained {
            add(RecordField::DOrK, &[RecordField::N, RecordField::Horizon])?;
        }
        if plan.n_grid.len() >= 2 {
            add(RecordField::N, &[RecordField::DOrK, RecordField::Horizon])?;
        }
        Ok(Self {
            plan: plan.clone(),
            total_records: records.len(),
            failed_records: records.iter().filter(|r| r.failed).count(),
            grid_points_all_failed: grid.iter().filter(|g| g.failed == g.trials).count(),
            grid,
            slopes,
        })
    }
}

/// Writes the records as RFC-4180 CSV with the fixed header.
pub fn write_records_csv<W: Write>(writer: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line.
pub fn write_records_jsonl<W: Write>(mut writer: W, records: &[ExperimentRecord]) -> Result<()> {
    for r in records {
        writeln!(writer, "{}", json::to_string_compact(r)?)?;
    }
    Ok(())
}

/// Writes `records.csv`, `records.jsonl` and `summary.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    summary: &ExperimentSummary,
    records: &[ExperimentRecord],
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_records_csv(std::fs::File::create(dir.join("records.csv"))?, records)?;
    write_records_jsonl(
        std::io::BufWriter::new(std::fs::File::create(dir.join("records.jsonl"))?),
        records,
    )?;
    json::write_pretty(&dir.join("summary.json"), summary)
}
