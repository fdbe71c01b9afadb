//! Brute-force oracles shared by the integration and acceptance tests.
//! None of these call into the code paths they are used to check.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn svd_norm(a: &DMatrix<f64>) -> f64 {
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Euclidean projection onto the ℓ₁ ball by enumerating every face
/// `{w : w_i = 0 (σ_i = 0), Σ σ_i w_i = r, σ_i w_i ≥ 0}` of the cross-polytope,
/// projecting onto its affine hull, keeping the feasible candidates and
/// returning the closest. Exponential (3^m); use for m ≤ 8.
pub fn l1_projection_oracle(v: &[f64], radius: f64) -> Vec<f64> {
    let m = v.len();
    if v.iter().map(|x| x.abs()).sum::<f64>() <= radius {
        return v.to_vec();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = 3usize.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let sigma: Vec<f64> = (0..m)
            .map(|_| {
                let s = (c % 3) as f64 - 1.0;
                c /= 3;
                s
            })
            .collect();
        let support: Vec<usize> = (0..m).filter(|&i| sigma[i] != 0.0).collect();
        if support.is_empty() {
            continue;
        }
        let t =
            (support.iter().map(|&i| sigma[i] * v[i]).sum::<f64>() - radius) / support.len() as f64;
        let mut w = vec![0.0; m];
        let mut feasible = true;
        for &i in &support {
            w[i] = v[i] - t * sigma[i];
            if sigma[i] * w[i] < -1e-14 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let dist: f64 = w.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, w));
        }
    }
    best.expect("some face is feasible").1
}

/// Projection onto the polyhedral cone `{u : a_j·u ≤ 0 ∀j}` by enumerating
/// active sets of at most `dim` constraints: project onto the null space of
/// the active rows, keep feasible candidates, return the closest.
pub fn polyhedral_cone_projection_oracle(rows: &[DVector<f64>], g: &DVector<f64>) -> DVector<f64> {
    let dim = g.len();
    let feasible = |u: &DVector<f64>| rows.iter().all(|a| a.dot(u) <= 1e-10 * (1.0 + u.norm()));
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut consider = |u: DVector<f64>| {
        if feasible(&u) {
            let d = (&u - g).norm();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, u));
            }
        }
    };
    consider(g.clone());
    consider(DVector::zeros(dim));
    let m = rows.len();
    let mut subset: Vec<usize> = Vec::new();
    fn recurse(
        start: usize,
        m: usize,
        max: usize,
        subset: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if !subset.is_empty() {
            visit(subset);
        }
        if subset.len() == max {
            return;
        }
        for j in start..m {
            subset.push(j);
            recurse(j + 1, m, max, subset, visit);
            subset.pop();
        }
    }
    let mut visit = |active: &[usize]| {
        let a = DMatrix::from_fn(active.len(), dim, |r, c| rows[active[r]][c]);
        let gram = &a * a.transpose();
        let pinv = gram.pseudo_inverse(1e-12).expect("pseudo-inverse");
        let u = g - a.transpose() * (pinv * (&a * g));
        consider(u);
    };
    recurse(0, m, dim, &mut subset, &mut visit);
    best.expect("zero is always feasible").1
}

/// Rows `a_σ = (s on S, σ off S)` describing the ℓ₁ descent cone.
pub fn l1_descent_cone_rows(dim: usize, support: &[usize], signs: &[f64]) -> Vec<DVector<f64>> {
    let off: Vec<usize> = (0..dim).filter(|i| !support.contains(i)).collect();
    (0..1usize << off.len())
        .map(|mask| {
            let mut a = DVector::zeros(dim);
            for (&i, &s) in support.iter().zip(signs) {
                a[i] = s;
            }
            for (bit, &i) in off.iter().enumerate() {
                a[i] = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
            }
            a
        })
        .collect()
}

/// A real matrix with prescribed spectrum: eigenvalue moduli in
/// `[0, max_modulus]`, a mix of real eigenvalues and conjugate pairs, and a
/// random well-conditioned eigenvector basis. Returns the matrix and a
/// closure-free description `(V, D)` with `A = V D V⁻¹` over ℂ.
pub struct Diagonalizable {
    pub a: DMatrix<f64>,
    pub vecs: DMatrix<Complex<f64>>,
    pub vals: Vec<Complex<f64>>,
}

pub fn random_diagonalizable(n: usize, max_modulus: f64, rng: &mut ChaCha8Rng) -> Diagonalizable {
    // Real block-diagonal form: 1x1 blocks for real eigenvalues, 2x2
    // rotation-scaling blocks for conjugate pairs.
    let mut block = DMatrix::<f64>::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    let mut bvecs = DMatrix::<Complex<f64>>::zeros(n, n);
    let mut i = 0;
    while i < n {
        let r = max_modulus * rng.random::<f64>();
        if i + 1 < n && rng.random::<bool>() {
            let theta = std::f64::consts::PI * rng.random::<f64>();
            let (c, s) = (r * theta.cos(), r * theta.sin());
            block[(i, i)] = c;
            block[(i, i + 1)] = -s;
            block[(i + 1, i)] = s;
            block[(i + 1, i + 1)] = c;
            // [[c, −s], [s, c]] has eigenvectors (1, ∓i)/√2 for c ± i s.
            let h = std::f64::consts::FRAC_1_SQRT_2;
            bvecs[(i, i)] = Complex::new(h, 0.0);
            bvecs[(i + 1, i)] = Complex::new(0.0, -h);
            bvecs[(i, i + 1)] = Complex::new(h, 0.0);
            bvecs[(i + 1, i + 1)] = Complex::new(0.0, h);
            vals.push(Complex::new(c, s));
            vals.push(Complex::new(c, -s));
            i += 2;
        } else {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            block[(i, i)] = sign * r;
            bvecs[(i, i)] = Complex::new(1.0, 0.0);
            vals.push(Complex::new(sign * r, 0.0));
            i += 1;
        }
    }
    let p = DMatrix::<f64>::identity(n, n) + 0.3 * gaussian_matrix(n, n, rng);
    let p_inv = p.clone().try_inverse().expect("invertible basis");
    let a = &p * block * p_inv;
    let vecs = p.map(|x| Complex::new(x, 0.0)) * bvecs;
    Diagonalizable { a, vecs, vals }
}

impl Diagonalizable {
    /// `A^i = V D^i V⁻¹` with `D^i` from explicit eigenvalue powers.
    pub fn power(&self, i: i32) -> DMatrix<f64> {
        let n = self.vals.len();
        let d = DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                self.vals[r].powi(i)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let inv = self
            .vecs
            .clone()
            .try_inverse()
            .expect("invertible eigenvectors");
        (&self.vecs * d * inv).map(|z| z.re)
    }

    /// `Σ_{i=0}^{terms−1} ‖A^i‖₂` with SVD norms.
    pub fn j_partial_sum(&self, terms: i32) -> f64 {
        (0..terms).map(|i| svd_norm(&self.power(i))).sum()
    }
}

/// Mean of the χ distribution with `d` degrees of freedom.
pub fn chi_mean(d: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let d = d as f64;
    2f64.sqrt() * (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp()
}
