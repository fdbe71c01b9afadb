//! Stable linear systems `x_{t+1} = A* x_t + η_{t+1}`: construction,
//! simulation and stability quantities.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, spectral_norm};
use crate::rng::{rng_from_seed, Rng};

/// Norm below which a power is preferred as the block of the J tail bound.
const J_BLOCK_TARGET: f64 = 0.5;
/// Hard cap on the number of powers summed when evaluating J.
const J_MAX_TERMS: usize = 1_000_000;
/// Largest `T·n` for which the block Toeplitz noise map is materialized.
pub const GAMMA_MAX_DIM: usize = 5000;

/// Default tolerance for [`stability_param_j`].
pub const DEFAULT_J_TOL: f64 = 1e-12;

/// A system matrix with its cached spectral radius and stability parameter.
#[derive(Debug, Clone)]
pub struct LdsModel {
    a: DMatrix<f64>,
    spectral_radius: f64,
    j: f64,
}

impl LdsModel {
    /// Wraps `a`. Unstable matrices are accepted here (J is reported as
    /// infinite) but rejected by [`simulate`].
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let rho = spectral_radius(&a)?;
        let j = if rho < 1.0 {
            stability_param_j(&a, DEFAULT_J_TOL)?
        } else {
            f64::INFINITY
        };
        Ok(Self {
            a,
            spectral_radius: rho,
            j,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// `J(A) = Σ_{i≥0} ‖A^i‖₂`.
    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius < 1.0
    }
}

/// Coordinate distribution of the process noise. All families have mean
/// zero and unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    #[default]
    Gaussian,
    /// Uniform on `{−1, +1}`.
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    Uniform,
}

impl NoiseFamily {
    pub fn sample(self, rng: &mut Rng) -> f64 {
        match self {
            NoiseFamily::Gaussian => StandardNormal.sample(rng),
            NoiseFamily::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseFamily::Uniform => {
                let s = 3.0_f64.sqrt();
                rng.random_range(-s..=s)
            }
        }
    }

    pub fn sample_vector(self, n: usize, rng: &mut Rng) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.sample(rng))
    }
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseFamily::Gaussian),
            "rademacher" => Ok(NoiseFamily::Rademacher),
            "uniform" => Ok(NoiseFamily::Uniform),
            other => Err(Error::Parameter(format!("unknown noise family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily) -> Self {
        Self { family }
    }
}

/// States `x_0..x_{T+1}` and the noises `η_1..η_{T+1}` that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<DVector<f64>>,
    noises: Vec<DVector<f64>>,
}

impl Trajectory {
    /// Runs the recursion from `x_0 = 0` with the given noises; the horizon
    /// is `noises.len() − 1`.
    pub fn from_noises(a: &DMatrix<f64>, noises: Vec<DVector<f64>>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A is {}x{}, not square",
                n,
                a.ncols()
            )));
        }
        if noises.len() < 2 {
            return Err(Error::Dimension(
                "need at least two noise vectors (T >= 1)".into(),
            ));
        }
        if let Some(bad) = noises.iter().find(|e| e.len() != n) {
            return Err(Error::Dimension(format!(
                "noise vector of length {} for a system of dimension {n}",
                bad.len()
            )));
        }
        let mut states = Vec::with_capacity(noises.len() + 1);
        states.push(DVector::zeros(n));
        for eta in &noises {
            let next = step(a, states.last().expect("non-empty"), eta);
            states.push(next);
        }
        Ok(Self { states, noises })
    }

    /// Assembles a trajectory from stored parts without re-running the
    /// recursion. Checks shapes and `x_0 = 0` only.
    pub fn from_parts(states: Vec<DVector<f64>>, noises: Vec<DVector<f64>>) -> Result<Self> {
        if states.len() < 3 {
            return Err(Error::Dimension(format!(
                "trajectory needs at least 3 states, got {}",
                states.len()
            )));
        }
        if !noises.is_empty() && noises.len() + 1 != states.len() {
            return Err(Error::Dimension(format!(
                "{} states but {} noises",
                states.len(),
                noises.len()
            )));
        }
        let n = states[0].len();
        if states.iter().chain(noises.iter()).any(|v| v.len() != n) {
            return Err(Error::Dimension("inconsistent vector lengths".into()));
        }
        if states[0].iter().any(|&x| x != 0.0) {
            return Err(Error::Dimension("x_0 must be the zero vector".into()));
        }
        Ok(Self { states, noises })
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    /// `η_1..η_{T+1}`; empty when the trajectory was loaded without noises.
    pub fn noises(&self) -> &[DVector<f64>] {
        &self.noises
    }

    pub fn has_noises(&self) -> bool {
        !self.noises.is_empty()
    }

    /// Horizon `T` (the trajectory holds `T + 2` states).
    pub fn horizon(&self) -> usize {
        self.states.len() - 2
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }
}

fn step(a: &DMatrix<f64>, x: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
    a * x + eta
}

/// Maximum eigenvalue modulus of `a`.
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "spectral radius needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let eig = a.complex_eigenvalues();
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Truncated series `Σ_{i=0}^{m} ‖A^i‖₂`.
///
/// The tail is only bounded once some power has spectral norm below one.
/// If `q = ‖A^p‖₂ < 1`, submultiplicativity gives
/// `Σ_{i>m} ‖A^i‖ ≤ q/(1−q)·Σ_{i=m−p+1}^{m} ‖A^i‖`, a geometric bound over
/// blocks of p terms that, unlike a step-to-step ratio, is not fooled by the
/// oscillating norms of rotating modes. The block length is shortened to
/// the first power with norm at most 1/2 when one appears. Summation stops
/// when the bound drops below `tol`.
pub fn stability_param_j(a: &DMatrix<f64>, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let rho = spectral_radius(a)?;
    if rho >= 1.0 {
        return Err(Error::Instability { rho });
    }
    let n = a.nrows();
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut norms = vec![1.0];
    let mut sum = 1.0;
    // (p, ‖A^p‖) of the block used for the tail bound.
    let mut block: Option<(usize, f64)> = None;
    for m in 1..J_MAX_TERMS {
        power = &power * a;
        let norm = spectral_norm(&power);
        sum += norm;
        norms.push(norm);
        if norm == 0.0 {
            return Ok(sum);
        }
        match block {
            None if norm < 1.0 => block = Some((m, norm)),
            Some((_, q)) if q > J_BLOCK_TARGET && norm <= J_BLOCK_TARGET => block = Some((m, norm)),
            _ => {}
        }
        if let Some((p, q)) = block {
            let recent: f64 = norms[norms.len() - p..].iter().sum();
            if recent * q / (1.0 - q) < tol {
                return Ok(sum);
            }
        }
    }
    Err(Error::Resource(format!(
        "J did not converge within {J_MAX_TERMS} terms (spectral radius {rho})"
    )))
}

/// Simulates `T` steps plus one (states `x_0..x_{T+1}`) from `x_0 = 0`.
pub fn simulate(
    model: &LdsModel,
    noise: NoiseSpec,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory> {
    if !model.is_stable() {
        return Err(Error::Instability {
            rho: model.spectral_radius(),
        });
    }
    if horizon == 0 {
        return Err(Error::Parameter("horizon T must be at least 1".into()));
    }
    let n = model.dim();
    let mut rng = rng_from_seed(seed);
    let noises = (0..=horizon)
        .map(|_| noise.family.sample_vector(n, &mut rng))
        .collect();
    Trajectory::from_noises(model.matrix(), noises)
}

/// Block lower-triangular Toeplitz map `Γ` with `vec([x_1 ⋯ x_T]) = Γ·[η_1; …; η_T]`.
/// Block `(i, j)` is `A^{i−j}` for `i ≥ j`.
pub fn gamma_matrix(a: &DMatrix<f64>, horizon: usize) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension("A must be square".into()));
    }
    if horizon == 0 {
        return Err(Error::Parameter("horizon T must be at least 1".into()));
    }
    let dim = horizon
        .checked_mul(n)
        .filter(|&d| d <= GAMMA_MAX_DIM)
        .ok_or_else(|| {
            Error::Resource(format!(
                "T·n = {}·{} exceeds the materialization limit {GAMMA_MAX_DIM}",
                horizon, n
            ))
        })?;
    let mut gamma = DMatrix::zeros(dim, dim);
    let mut power = DMatrix::<f64>::identity(n, n);
    for lag in 0..horizon {
        for j in 0..horizon - lag {
            let i = j + lag;
            gamma.view_mut((i * n, j * n), (n, n)).copy_from(&power);
        }
        power = &power * a;
    }
    Ok(gamma)
}

/// Random matrix rescaled to spectral norm `target_spec_norm`, optionally
/// with exactly `k` nonzero entries at uniformly random positions.
pub fn random_stable_matrix(
    n: usize,
    target_spec_norm: f64,
    sparsity: Option<usize>,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::Parameter("dimension n must be positive".into()));
    }
    if !(target_spec_norm > 0.0 && target_spec_norm < 1.0) {
        return Err(Error::Parameter(format!(
            "target spectral norm must lie in (0, 1), got {target_spec_norm}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut a = match sparsity {
        None => DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng)),
        Some(k) if k == 0 || k > n * n => {
            return Err(Error::Parameter(format!(
                "sparsity k = {k} outside 1..={}",
                n * n
            )));
        }
        Some(k) => {
            let mut a = DMatrix::zeros(n, n);
            for idx in rand::seq::index::sample(&mut rng, n * n, k) {
                let mut v: f64 = StandardNormal.sample(&mut rng);
                while v == 0.0 {
                    v = StandardNormal.sample(&mut rng);
                }
                a[(idx / n, idx % n)] = v;
            }
            a
        }
    };
    let norm = spectral_norm(&a);
    a *= target_spec_norm / norm;
    Ok(a)
}

/// Serialized form of a model together with a simulated trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryDocument {
    pub n: usize,
    /// Row-major `A*`, absent for trajectories of unknown origin.
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub states: Vec<Vec<f64>>,
    #[serde(default)]
    pub noises: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_family: Option<NoiseFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_radius: Option<f64>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl TrajectoryDocument {
    pub fn new(model: &LdsModel, traj: &Trajectory, seed: u64, noise: NoiseSpec) -> Self {
        Self {
            n: model.dim(),
            a: Some(linalg::to_row_major(model.matrix())),
            horizon: traj.horizon(),
            states: traj
                .states()
                .iter()
                .map(|v| v.iter().copied().collect())
                .collect(),
            noises: traj
                .noises()
                .iter()
                .map(|v| v.iter().copied().collect())
                .collect(),
            seed: Some(seed),
            noise_family: Some(noise.family),
            spectral_radius: Some(model.spectral_radius()),
            j: Some(model.j()),
            config: None,
        }
    }

    /// The stored `A*`, if any.
    pub fn system_matrix(&self) -> Result<Option<DMatrix<f64>>> {
        self.a
            .as_ref()
            .map(|a| linalg::from_row_major(self.n, self.n, a))
            .transpose()
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        let to_vecs = |rows: &[Vec<f64>]| -> Vec<DVector<f64>> {
            rows.iter().map(|r| DVector::from_column_slice(r)).collect()
        };
        let traj = Trajectory::from_parts(to_vecs(&self.states), to_vecs(&self.noises))?;
        if traj.dim() != self.n || traj.horizon() != self.horizon {
            return Err(Error::Schema(format!(
                "document says n={}, T={} but states give n={}, T={}",
                self.n,
                self.horizon,
                traj.dim(),
                traj.horizon()
            )));
        }
        Ok(traj)
    }
}
