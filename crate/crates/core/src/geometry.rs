//! Complexity quantities that control the estimation error: γ-functional
//! upper bounds for the subspace and ℓ₁ examples, Monte-Carlo Gaussian
//! widths of tangent cones, and the assembled error bound.
//!
//! γ-functionals are never computed exactly. Every bound here carries
//! unspecified universal constants, which are set to one; reports mark
//! such values with `"approx": true`.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::quadrature;
use crate::rng::rng_for_stream;

/// Samples per independently seeded Monte-Carlo batch.
const WIDTH_BATCH: usize = 512;
/// Bisection tolerance on the soft-threshold parameter.
const THRESHOLD_TOL: f64 = 1e-10;
/// Relative tolerance of the entropy-integral quadrature.
pub const DUDLEY_REL_TOL: f64 = 1e-6;

/// `β(n, k) = √(k·ln(n²/k) + k)`.
pub fn beta(n: usize, k: usize) -> Result<f64> {
    check_sparsity(n, k)?;
    let (n, k) = (n as f64, k as f64);
    Ok((k * (n * n / k).ln() + k).sqrt())
}

fn check_sparsity(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 || k > n * n {
        return Err(Error::Parameter(format!(
            "need 1 <= k <= n^2, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// `(γ₁, γ₂)` bounds `(d, √d)` for a d-dimensional subspace.
pub fn gamma_bounds_subspace(d: usize) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::Parameter(
            "subspace dimension must be positive".into(),
        ));
    }
    let d = d as f64;
    Ok((d, d.sqrt()))
}

/// `n·β·(ln(n/β) + 1)`, the γ₁ bound for the ℓ₁ descent cone at a k-sparse
/// point. The logarithm is clamped at zero when `β > n`.
pub fn gamma1_bound_l1(n: usize, k: usize) -> Result<f64> {
    let b = beta(n, k)?;
    let nf = n as f64;
    Ok(nf * b * ((nf / b).ln().max(0.0) + 1.0))
}

/// Tangent cone of the constraint set at `A*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TangentConeDescriptor {
    /// For a subspace the tangent cone is the subspace itself.
    SubspaceCone { d: usize },
    /// Descent cone of `‖·‖_{1,1}` at a k-sparse matrix on the boundary of
    /// `‖A*‖_{1,1}·B₁`. `support` holds column-major indices into `vec(A)`.
    L1DescentCone {
        n: usize,
        k: usize,
        support: Vec<usize>,
        signs: Vec<f64>,
    },
}

impl TangentConeDescriptor {
    pub fn subspace(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter(
                "subspace dimension must be positive".into(),
            ));
        }
        Ok(TangentConeDescriptor::SubspaceCone { d })
    }

    pub fn l1_descent(n: usize, support: Vec<usize>, signs: Vec<f64>) -> Result<Self> {
        let k = support.len();
        check_sparsity(n, k)?;
        if signs.len() != k {
            return Err(Error::Parameter(format!(
                "{} signs for a support of size {k}",
                signs.len()
            )));
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::Parameter("signs must be +1 or -1".into()));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k || sorted.last().is_some_and(|&i| i >= n * n) {
            return Err(Error::Parameter(
                "support indices must be distinct and < n^2".into(),
            ));
        }
        Ok(TangentConeDescriptor::L1DescentCone {
            n,
            k,
            support,
            signs,
        })
    }

    /// Descent cone at the nonzero pattern of `a`.
    pub fn l1_descent_at(a: &DMatrix<f64>) -> Result<Self> {
        let (support, signs): (Vec<usize>, Vec<f64>) = a
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i, x.signum()))
            .unzip();
        Self::l1_descent(a.nrows(), support, signs)
    }

    /// Dimension of the space the cone lives in, as sampled by the width
    /// estimator (the subspace cone is sampled in its own coordinates).
    fn sample_dim(&self) -> usize {
        match self {
            TangentConeDescriptor::SubspaceCone { d } => *d,
            TangentConeDescriptor::L1DescentCone { n, .. } => n * n,
        }
    }

    /// `‖Π_T(g)‖`, the support function of `T ∩ (unit ball)` at `g`.
    fn sup_inner(&self, g: &[f64]) -> f64 {
        match self {
            TangentConeDescriptor::SubspaceCone { .. } => {
                g.iter().map(|x| x * x).sum::<f64>().sqrt()
            }
            TangentConeDescriptor::L1DescentCone { support, signs, .. } => {
                let (proj, _) = project_l1_descent_cone(g, support, signs);
                proj.iter().map(|x| x * x).sum::<f64>().sqrt()
            }
        }
    }
}

/// Euclidean projection onto the ℓ₁ descent cone
/// `{u : Σ_{i∈S} s_i u_i + Σ_{i∉S} |u_i| ≤ 0}`.
///
/// By Moreau decomposition `Π_T(g) = g − Π_{T°}(g)`, and the polar cone is
/// `{λ(s on S, w off S) : λ ≥ 0, |w_i| ≤ 1}`. For fixed λ the best `w` clips
/// `g` off the support, so the residual is `g_i − λs_i` on S and the soft
/// threshold of `g_i` at λ elsewhere. The optimal λ zeroes the (monotone)
/// derivative `kλ − Σ_S s_i g_i − Σ_{S^c} (|g_i| − λ)_+`, found by bisection.
/// Returns the projection and λ.
pub fn project_l1_descent_cone(g: &[f64], support: &[usize], signs: &[f64]) -> (Vec<f64>, f64) {
    let k = support.len() as f64;
    let mut on_support = vec![false; g.len()];
    let mut aligned = 0.0;
    for (&i, &s) in support.iter().zip(signs) {
        on_support[i] = true;
        aligned += s * g[i];
    }
    let derivative = |lambda: f64| -> f64 {
        let off: f64 = g
            .iter()
            .zip(&on_support)
            .filter(|(_, &on)| !on)
            .map(|(x, _)| (x.abs() - lambda).max(0.0))
            .sum();
        k * lambda - aligned - off
    };
    let lambda = if derivative(0.0) >= 0.0 {
        0.0
    } else {
        let max_abs = g.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut lo = 0.0;
        let mut hi = max_abs.max(aligned / k) + 1.0;
        while hi - lo > THRESHOLD_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if derivative(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut proj: Vec<f64> = g
        .iter()
        .map(|&x| x.signum() * (x.abs() - lambda).max(0.0))
        .collect();
    for (&i, &s) in support.iter().zip(signs) {
        proj[i] = g[i] - lambda * s;
    }
    (proj, lambda)
}

/// Monte-Carlo estimate of a Gaussian width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Estimates `w(T ∩ S) = E sup_{u ∈ T, ‖u‖_F ≤ 1} ⟨G, u⟩ = E‖Π_T(G)‖_F`.
pub fn gaussian_width_mc(
    cone: &TangentConeDescriptor,
    samples: usize,
    seed: u64,
) -> Result<WidthEstimate> {
    gaussian_width_mc_with(cone, samples, seed, Execution::default())
}

/// [`gaussian_width_mc`] with an explicit execution strategy. Batches are
/// seeded by index, so the estimate does not depend on the strategy.
pub fn gaussian_width_mc_with(
    cone: &TangentConeDescriptor,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<WidthEstimate> {
    if samples == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    let dim = cone.sample_dim();
    let batches = samples.div_ceil(WIDTH_BATCH);
    let partial = exec.map_range(batches, |b| {
        let mut rng = rng_for_stream(seed, b as u64);
        let count = WIDTH_BATCH.min(samples - b * WIDTH_BATCH);
        let mut g = vec![0.0; dim];
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..count {
            for x in g.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
            let v = cone.sup_inner(&g);
            sum += v;
            sum_sq += v * v;
        }
        (sum, sum_sq)
    });
    let (sum, sum_sq) = partial
        .into_iter()
        .fold((0.0, 0.0), |(s, q), (bs, bq)| (s + bs, q + bq));
    let m = samples as f64;
    let mean = sum / m;
    let std_err = if samples > 1 {
        let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    Ok(WidthEstimate {
        mean,
        std_err,
        samples,
    })
}

/// Order α of a γ-functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaOrder {
    One,
    Two,
}

impl GammaOrder {
    pub fn from_alpha(alpha: u32) -> Result<Self> {
        match alpha {
            1 => Ok(GammaOrder::One),
            2 => Ok(GammaOrder::Two),
            other => Err(Error::Parameter(format!(
                "alpha must be 1 or 2, got {other}"
            ))),
        }
    }
}

/// Entropy-integral bound `∫_0^{diam} (log N(ε))^{1/α} dε` (unit constant).
pub fn dudley_gamma_bound(
    covering_log: impl Fn(f64) -> f64,
    diameter: f64,
    alpha: GammaOrder,
) -> Result<f64> {
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(Error::Parameter(format!(
            "diameter must be positive, got {diameter}"
        )));
    }
    let integrand = |eps: f64| {
        let v = covering_log(eps);
        if v < 0.0 {
            f64::NAN
        } else {
            match alpha {
                GammaOrder::One => v,
                GammaOrder::Two => v.sqrt(),
            }
        }
    };
    quadrature::integrate(integrand, 0.0, diameter, DUDLEY_REL_TOL)
}

/// Log-covering bound `d·ln(3/ε)` of the unit ball of a d-dimensional
/// subspace (zero once a single ball suffices, `ε ≥ 1`).
pub fn subspace_log_covering(d: usize) -> impl Fn(f64) -> f64 {
    move |eps| {
        if eps < 1.0 {
            d as f64 * (3.0 / eps).ln()
        } else {
            0.0
        }
    }
}

/// Two-regime log-covering bound `min{β²/ε², n²·ln(12/ε)}` of the ℓ₁
/// descent cone intersected with the unit sphere.
pub fn sparse_log_covering(n: usize, k: usize) -> Result<impl Fn(f64) -> f64> {
    let b = beta(n, k)?;
    let n2 = (n * n) as f64;
    Ok(move |eps: f64| (b * b / (eps * eps)).min(n2 * (12.0 / eps).ln()).max(0.0))
}

/// Inputs to the tangent-cone error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Stability parameter `J(A*)`.
    pub j: f64,
    /// γ₂ bound in Frobenius norm.
    pub g2_frob: f64,
    /// γ₂ bound in spectral norm.
    pub g2_spec: f64,
    /// γ₁ bound in spectral norm.
    pub g1_spec: f64,
    /// `‖A* − B‖_F`.
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBound {
    /// `J⁴·max{γ₂(‖·‖₂)², ln²(1/δ)}`.
    pub t_min: f64,
    /// `J·[(ln(1/δ) + γ₂(‖·‖_F))/√T + γ₁(‖·‖₂)/T] + J²·bias`.
    pub error_bound: f64,
}

/// Sample-size requirement and error bound with all constants set to one.
pub fn theorem1_bound(inputs: &BoundInputs, horizon: usize, delta: f64) -> Result<ErrorBound> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if horizon == 0 {
        return Err(Error::Parameter("T must be positive".into()));
    }
    let BoundInputs {
        j,
        g2_frob,
        g2_spec,
        g1_spec,
        bias,
    } = *inputs;
    if [j, g2_frob, g2_spec, g1_spec, bias]
        .iter()
        .any(|v| !v.is_finite() || *v < 0.0)
    {
        return Err(Error::Parameter(format!(
            "bound inputs must be finite and nonnegative: {inputs:?}"
        )));
    }
    let log_term = (1.0 / delta).ln();
    let t = horizon as f64;
    Ok(ErrorBound {
        t_min: j.powi(4) * (g2_spec * g2_spec).max(log_term * log_term),
        error_bound: j * ((log_term + g2_frob) / t.sqrt() + g1_spec / t) + j * j * bias,
    })
}

/// A value that holds only up to an unspecified universal constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approx {
    pub value: f64,
    pub approx: bool,
}

impl Approx {
    pub fn up_to_constant(value: f64) -> Self {
        Self {
            value,
            approx: true,
        }
    }

    pub fn exact(value: f64) -> Self {
        Self {
            value,
            approx: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub error_bound: Approx,
}

/// Which structured example a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "lowercase")]
pub enum ComplexityScenario {
    Subspace { n: usize, d: usize },
    Sparse { n: usize, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    #[serde(flatten)]
    pub scenario: ComplexityScenario,
    #[serde(rename = "J")]
    pub j: Approx,
    pub delta: f64,
    pub gamma2_frob_bound: Approx,
    pub gamma2_spec_bound: Approx,
    pub gamma1_spec_bound: Approx,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Approx>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_mc: Option<WidthEstimate>,
    /// Entropy-integral value of the matching covering bound, for comparison
    /// with the closed-form γ bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dudley_gamma1: Option<Approx>,
    #[serde(rename = "T_min")]
    pub t_min: Approx,
    pub error_bound: Vec<BoundRow>,
}

impl ComplexityReport {
    /// Closed-form bounds for one scenario, with `B = A*` so the bias term
    /// vanishes.
    pub fn new(
        scenario: ComplexityScenario,
        j: f64,
        delta: f64,
        horizons: &[usize],
    ) -> Result<Self> {
        let (g1, g2, beta_val, dudley) = match scenario {
            ComplexityScenario::Subspace { n, d } => {
                if d > n * n {
                    return Err(Error::Parameter(format!("d = {d} exceeds n^2 = {}", n * n)));
                }
                let (g1, g2) = gamma_bounds_subspace(d)?;
                let dudley = dudley_gamma_bound(subspace_log_covering(d), 2.0, GammaOrder::One)?;
                (g1, g2, None, dudley)
            }
            ComplexityScenario::Sparse { n, k } => {
                let b = beta(n, k)?;
                let g1 = gamma1_bound_l1(n, k)?;
                let dudley = dudley_gamma_bound(sparse_log_covering(n, k)?, 2.0, GammaOrder::One)?;
                (g1, b, Some(b), dudley)
            }
        };
        let inputs = BoundInputs {
            j,
            g2_frob: g2,
            g2_spec: g2,
            g1_spec: g1,
            bias: 0.0,
        };
        // Validates delta and the inputs even when no horizons are requested.
        let t_min = theorem1_bound(&inputs, 1, delta)?.t_min;
        let error_bound = horizons
            .iter()
            .map(|&t| {
                theorem1_bound(&inputs, t, delta).map(|b| BoundRow {
                    horizon: t,
                    error_bound: Approx::up_to_constant(b.error_bound),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scenario,
            j: Approx::exact(j),
            delta,
            gamma2_frob_bound: Approx::up_to_constant(g2),
            gamma2_spec_bound: Approx::up_to_constant(g2),
            gamma1_spec_bound: Approx::up_to_constant(g1),
            beta: beta_val.map(Approx::up_to_constant),
            width_mc: None,
            dudley_gamma1: Some(Approx::up_to_constant(dudley)),
            t_min: Approx::up_to_constant(t_min),
            error_bound,
        })
    }

    pub fn with_width(mut self, width: WidthEstimate) -> Self {
        self.width_mc = Some(width);
        self
    }
}
