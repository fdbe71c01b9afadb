//! Constrained least-squares estimation of `A*` from one trajectory:
//!
//! ```text
//! Â ∈ argmin_{A ∈ K} ‖X̃ − A X‖_F²,   X = [x_1 ⋯ x_T],  X̃ = [x_2 ⋯ x_{T+1}]
//! ```
//!
//! `K` is one of the convex bodies in [`ConstraintSet`]. The unconstrained
//! problem has the closed form [`ols`]; everything else goes through
//! projected gradient descent in [`constrained_ls`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{self, frob_inner, spectral_norm};

/// Tolerance used when checking orthonormality of a subspace basis.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Relative norm below which a Gram–Schmidt residual counts as nearly dependent.
const NEAR_DEPENDENCE: f64 = 1e-8;
/// Relative singular-value cutoff for the OLS pseudoinverse.
const PINV_CUTOFF: f64 = 1e-12;
const MAX_BACKTRACKS: usize = 200;

/// A `d`-dimensional affine subspace `offset + span{V_1, …, V_d}` of n×n
/// matrices, with the basis orthonormal under `⟨X, Y⟩ = Tr(XᵀY)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSet {
    basis: Vec<DMatrix<f64>>,
    offset: DMatrix<f64>,
    nearly_dependent: bool,
}

impl SubspaceSet {
    /// Re-orthonormalizes `basis` with modified Gram–Schmidt (two passes).
    /// Exactly dependent inputs are rejected; nearly dependent ones are
    /// accepted and flagged through [`SubspaceSet::nearly_dependent`].
    pub fn new(basis: Vec<DMatrix<f64>>, offset: DMatrix<f64>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Parameter("subspace basis is empty".into()));
        }
        let (rows, cols) = offset.shape();
        if rows != cols {
            return Err(Error::Dimension("subspace offset must be square".into()));
        }
        if let Some(b) = basis.iter().find(|b| b.shape() != (rows, cols)) {
            return Err(Error::Dimension(format!(
                "basis matrix is {}x{}, offset is {rows}x{cols}",
                b.nrows(),
                b.ncols()
            )));
        }
        if basis.len() > rows * cols {
            return Err(Error::Parameter(format!(
                "{} basis matrices exceed the ambient dimension {}",
                basis.len(),
                rows * cols
            )));
        }
        let mut ortho: Vec<DMatrix<f64>> = Vec::with_capacity(basis.len());
        let mut nearly_dependent = false;
        for (idx, b) in basis.into_iter().enumerate() {
            let original = b.norm();
            if original == 0.0 || !original.is_finite() {
                return Err(Error::Parameter(format!(
                    "basis matrix {idx} is zero or non-finite"
                )));
            }
            let mut v = b;
            for _ in 0..2 {
                for q in &ortho {
                    let c = frob_inner(&v, q);
                    linalg::add_scaled(&mut v, -c, q);
                }
            }
            let residual = v.norm();
            if residual <= 1e-14 * original {
                return Err(Error::Parameter(format!(
                    "basis matrix {idx} is linearly dependent on the previous ones"
                )));
            }
            if residual < NEAR_DEPENDENCE * original {
                nearly_dependent = true;
            }
            v /= residual;
            ortho.push(v);
        }
        Ok(Self {
            basis: ortho,
            offset,
            nearly_dependent,
        })
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn offset(&self) -> &DMatrix<f64> {
        &self.offset
    }

    /// Subspace dimension `d`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Matrix side length `n`.
    pub fn n(&self) -> usize {
        self.offset.nrows()
    }

    /// Set when Gram–Schmidt found an input direction almost inside the
    /// span of earlier ones.
    pub fn nearly_dependent(&self) -> bool {
        self.nearly_dependent
    }

    pub fn project(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let diff = a - &self.offset;
        let mut out = self.offset.clone();
        for v in &self.basis {
            linalg::add_scaled(&mut out, frob_inner(&diff, v), v);
        }
        out
    }
}

/// Convex constraint body `K`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    Unconstrained,
    Subspace(SubspaceSet),
    /// `{A : ‖A‖_{1,1} ≤ radius}`.
    L1Ball {
        radius: f64,
    },
}

impl ConstraintSet {
    pub fn l1_ball(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!(
                "l1 radius must be positive, got {radius}"
            )));
        }
        Ok(ConstraintSet::L1Ball { radius })
    }

    pub fn subspace(basis: Vec<DMatrix<f64>>, offset: DMatrix<f64>) -> Result<Self> {
        SubspaceSet::new(basis, offset).map(ConstraintSet::Subspace)
    }

    /// Euclidean (Frobenius) projection onto the set.
    pub fn project(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            ConstraintSet::Unconstrained => a.clone(),
            ConstraintSet::Subspace(s) => s.project(a),
            ConstraintSet::L1Ball { radius } => {
                let projected = project_l1_ball(a.as_slice(), *radius);
                DMatrix::from_column_slice(a.nrows(), a.ncols(), &projected)
            }
        }
    }

    /// Membership up to `tol` in Frobenius distance.
    pub fn contains(&self, a: &DMatrix<f64>, tol: f64) -> bool {
        (self.project(a) - a).norm() <= tol
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConstraintSet::Unconstrained => "unconstrained",
            ConstraintSet::Subspace(_) => "subspace",
            ConstraintSet::L1Ball { .. } => "l1",
        }
    }
}

/// Euclidean projection of `v` onto `{w : ‖w‖₁ ≤ radius}` by sorting the
/// magnitudes and locating the soft threshold: `θ = (Σ_{i≤ρ} μ_i − r)/ρ`
/// with `ρ` the largest index satisfying `μ_ρ − θ_ρ > 0`.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    let mut mu: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mu.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mu.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if m - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

/// Regression matrices assembled from a trajectory.
#[derive(Debug, Clone)]
pub struct DataMatrices {
    /// `[x_1 ⋯ x_T]`, n×T.
    pub x: DMatrix<f64>,
    /// `[x_2 ⋯ x_{T+1}]`, n×T.
    pub x_tilde: DMatrix<f64>,
    /// `[η_2 ⋯ η_{T+1}]`, present when the noises are known.
    pub e: Option<DMatrix<f64>>,
}

impl DataMatrices {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.x.ncols()
    }

    /// `‖X̃ − A X‖_F²`.
    pub fn objective(&self, a: &DMatrix<f64>) -> f64 {
        (&self.x_tilde - a * &self.x).norm_squared()
    }
}

pub fn build_data_matrices(traj: &Trajectory) -> Result<DataMatrices> {
    let states = traj.states();
    if states.len() < 3 {
        return Err(Error::Dimension(format!(
            "need at least 3 states, got {}",
            states.len()
        )));
    }
    let n = traj.dim();
    let horizon = traj.horizon();
    let x = DMatrix::from_fn(n, horizon, |i, t| states[t + 1][i]);
    let x_tilde = DMatrix::from_fn(n, horizon, |i, t| states[t + 2][i]);
    let e = traj
        .has_noises()
        .then(|| DMatrix::from_fn(n, horizon, |i, t| traj.noises()[t + 1][i]));
    Ok(DataMatrices { x, x_tilde, e })
}

/// Step-size policy for projected gradient descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum StepRule {
    Fixed {
        eta: f64,
    },
    /// `η = 1/(2σ_max(X)²)`, the inverse Lipschitz constant of `∇f`.
    Lipschitz,
    /// Shrink `η ← βη` until `f(A⁺) ≤ f(A) − c·η·‖G_η(A)‖²`.
    Backtracking {
        beta: f64,
        c: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Gradient-mapping tolerance; `None` means `1e-8·(1 + ‖X̃‖_F)`.
    #[serde(default)]
    pub grad_map_tol: Option<f64>,
    pub step_rule: StepRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            grad_map_tol: None,
            step_rule: StepRule::Lipschitz,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be positive".into()));
        }
        if let Some(tol) = self.grad_map_tol {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::Parameter(format!(
                    "grad_map_tol must be positive, got {tol}"
                )));
            }
        }
        match self.step_rule {
            StepRule::Fixed { eta } if !(eta > 0.0 && eta.is_finite()) => Err(Error::Parameter(
                format!("fixed step must be positive, got {eta}"),
            )),
            StepRule::Backtracking { beta, c }
                if !(beta > 0.0 && beta < 1.0 && c > 0.0 && c < 1.0) =>
            {
                Err(Error::Parameter(format!(
                    "backtracking parameters must lie in (0,1), got beta={beta}, c={c}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn resolved_tol(&self, data: &DataMatrices) -> f64 {
        self.grad_map_tol
            .unwrap_or_else(|| 1e-8 * (1.0 + data.x_tilde.norm()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub a_hat: DMatrix<f64>,
    /// `‖X̃ − Â X‖_F²`.
    pub objective: f64,
    pub grad_map_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Step size at which `grad_map_norm` was measured.
    pub step: f64,
}

/// Closed-form least squares `Â = X̃ Xᵀ (X Xᵀ)⁺`, computed from the SVD of
/// `X` so rank-deficient data (e.g. `T < n`) gets the minimum-norm solution.
pub fn ols(data: &DataMatrices) -> EstimateResult {
    let n = data.n();
    let svd = data.x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("Vᵀ requested");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = PINV_CUTOFF * sigma_max;
    // X̃ V Σ⁺ Uᵀ
    let mut xv = &data.x_tilde * v_t.transpose();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let scale = if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 };
        xv.column_mut(k).scale_mut(scale);
    }
    let a_hat = if xv.ncols() == 0 {
        DMatrix::zeros(n, n)
    } else {
        xv * u.transpose()
    };
    let residual = &data.x_tilde - &a_hat * &data.x;
    let grad = -2.0 * &residual * data.x.transpose();
    EstimateResult {
        objective: residual.norm_squared(),
        grad_map_norm: grad.norm(),
        a_hat,
        iterations: 0,
        converged: true,
        step: 0.0,
    }
}

/// Quadratic pieces of `f(A) = ‖X̃ − AX‖_F²`: `f = s − 2⟨A, C⟩ + ⟨AG, A⟩`.
struct Quadratic {
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
    const_term: f64,
}

impl Quadratic {
    fn new(data: &DataMatrices) -> Self {
        Self {
            gram: &data.x * data.x.transpose(),
            cross: &data.x_tilde * data.x.transpose(),
            const_term: data.x_tilde.norm_squared(),
        }
    }

    fn value(&self, a: &DMatrix<f64>) -> f64 {
        let ag = a * &self.gram;
        self.const_term - 2.0 * frob_inner(a, &self.cross) + frob_inner(&ag, a)
    }

    fn gradient(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        2.0 * (a * &self.gram - &self.cross)
    }

    /// `f(A + D) − f(A)` given `∇f(A)`. Exact for a quadratic and free of
    /// the cancellation that differencing two values of `f` suffers near
    /// the optimum.
    fn change(&self, grad: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
        frob_inner(grad, d) + frob_inner(&(d * &self.gram), d)
    }
}

/// Projected gradient descent on `‖X̃ − AX‖_F²` over `K`.
pub fn constrained_ls(
    data: &DataMatrices,
    k: &ConstraintSet,
    cfg: &SolverConfig,
) -> Result<EstimateResult> {
    solve(data, k, cfg, None)
}

/// Same as [`constrained_ls`], also returning the objective value after
/// every iterate (index 0 is the starting point).
pub fn constrained_ls_traced(
    data: &DataMatrices,
    k: &ConstraintSet,
    cfg: &SolverConfig,
) -> Result<(EstimateResult, Vec<f64>)> {
    let mut trace = Vec::new();
    let res = solve(data, k, cfg, Some(&mut trace))?;
    Ok((res, trace))
}

fn solve(
    data: &DataMatrices,
    k: &ConstraintSet,
    cfg: &SolverConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<EstimateResult> {
    cfg.validate()?;
    let n = data.n();
    if let ConstraintSet::Subspace(s) = k {
        if s.n() != n {
            return Err(Error::Dimension(format!(
                "subspace lives in {}x{} matrices, data has n = {n}",
                s.n(),
                s.n()
            )));
        }
    }
    let quad = Quadratic::new(data);
    let tol = cfg.resolved_tol(data);
    let lipschitz = 2.0 * spectral_norm(&quad.gram);
    let lipschitz_step = if lipschitz > 0.0 {
        1.0 / lipschitz
    } else {
        1.0
    };
    let mut eta = match cfg.step_rule {
        StepRule::Fixed { eta } => eta,
        StepRule::Lipschitz => lipschitz_step,
        StepRule::Backtracking { .. } => 1.0,
    };

    let mut a = k.project(&DMatrix::zeros(n, n));
    let mut f = quad.value(&a);
    if let Some(t) = trace.as_deref_mut() {
        t.push(f);
    }
    for it in 0..cfg.max_iters {
        let grad = quad.gradient(&a);
        let next = match cfg.step_rule {
            StepRule::Fixed { .. } | StepRule::Lipschitz => k.project(&(&a - eta * &grad)),
            StepRule::Backtracking { beta, c } => {
                eta /= beta;
                let mut tries = 0;
                loop {
                    let cand = k.project(&(&a - eta * &grad));
                    let d = &cand - &a;
                    let step_sq = d.norm_squared();
                    // c·η·‖G_η‖² = c·‖A⁺ − A‖²/η
                    // Below 2(1−c)/L the test holds in exact arithmetic, so a
                    // failure there is rounding noise and the step is taken.
                    if eta <= 2.0 * (1.0 - c) * lipschitz_step
                        || quad.change(&grad, &d) <= -c * step_sq / eta
                        || step_sq == 0.0
                    {
                        break cand;
                    }
                    eta *= beta;
                    tries += 1;
                    if tries > MAX_BACKTRACKS || eta == 0.0 {
                        return Err(Error::Divergence {
                            iteration: it,
                            objective: f,
                        });
                    }
                }
            }
        };
        let grad_map_norm = (&a - &next).norm() / eta;
        if grad_map_norm <= tol {
            return Ok(finish(data, a, grad_map_norm, it, true, eta));
        }
        a = next;
        f = quad.value(&a);
        if !f.is_finite() || a.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence {
                iteration: it + 1,
                objective: f,
            });
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(f);
        }
    }
    // Re-measure stationarity at the final iterate.
    let grad = quad.gradient(&a);
    let next = k.project(&(&a - eta * &grad));
    let grad_map_norm = (&a - &next).norm() / eta;
    let converged = grad_map_norm <= tol;
    Ok(finish(
        data,
        a,
        grad_map_norm,
        cfg.max_iters,
        converged,
        eta,
    ))
}

fn finish(
    data: &DataMatrices,
    a_hat: DMatrix<f64>,
    grad_map_norm: f64,
    iterations: usize,
    converged: bool,
    step: f64,
) -> EstimateResult {
    EstimateResult {
        objective: data.objective(&a_hat),
        grad_map_norm,
        a_hat,
        iterations,
        converged,
        step,
    }
}

/// Outcome of the first-order optimality inequality
/// `‖(Â−B)X‖_F² ≤ ⟨(Â−B)X, E⟩ + ‖(A*−B)X‖_F·‖(Â−B)X‖_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    /// `slack < −tol_rel·max(1, lhs)`.
    pub violated: bool,
}

/// Default relative tolerance for [`check_first_order_inequality`].
pub const FIRST_ORDER_TOL_REL: f64 = 1e-6;

pub fn check_first_order_inequality(
    a_hat: &DMatrix<f64>,
    b: &DMatrix<f64>,
    a_star: &DMatrix<f64>,
    data: &DataMatrices,
    tol_rel: f64,
) -> Result<FirstOrderReport> {
    let e = data.e.as_ref().ok_or_else(|| {
        Error::UnsupportedCheck("the noise matrix E is unknown for this trajectory".into())
    })?;
    let diff_x = (a_hat - b) * &data.x;
    let bias_x = (a_star - b) * &data.x;
    let lhs = diff_x.norm_squared();
    let rhs = frob_inner(&diff_x, e) + bias_x.norm() * diff_x.norm();
    let slack = rhs - lhs;
    Ok(FirstOrderReport {
        lhs,
        rhs,
        slack,
        violated: slack < -tol_rel * lhs.max(1.0),
    })
}

/// JSON form of an [`EstimateResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateDocument {
    pub n: usize,
    pub constraint: String,
    #[serde(rename = "A_hat")]
    pub a_hat: Vec<f64>,
    pub objective: f64,
    pub grad_map_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err_frobenius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_order: Option<FirstOrderReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl EstimateDocument {
    pub fn new(result: &EstimateResult, constraint: &ConstraintSet) -> Self {
        Self {
            n: result.a_hat.nrows(),
            constraint: constraint.name().to_string(),
            a_hat: linalg::to_row_major(&result.a_hat),
            objective: result.objective,
            grad_map_norm: result.grad_map_norm,
            iterations: result.iterations,
            converged: result.converged,
            err_frobenius: None,
            first_order: None,
            config: None,
        }
    }
}
