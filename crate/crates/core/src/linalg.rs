//! Dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative residual tolerance for the singular-value power iteration.
pub const POWER_ITER_TOL: f64 = 1e-12;
/// Iteration cap for the singular-value power iteration.
pub const POWER_ITER_MAX: usize = 10_000;

/// Largest singular value of `a`.
///
/// Runs power iteration on `AᵀA` in operator form (two matrix-vector products
/// per step, the Gram matrix is never formed) until the eigen-residual
/// `‖AᵀAv − λv‖` drops below `POWER_ITER_TOL · λ`. If the cap is hit before
/// that, the value is taken from a full SVD instead.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    if a.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    match power_iteration(a, POWER_ITER_TOL, POWER_ITER_MAX) {
        Some(sigma) => sigma,
        None => svd_spectral_norm(a),
    }
}

/// Largest singular value from a full SVD.
pub fn svd_spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

fn power_iteration(a: &DMatrix<f64>, tol: f64, max_iters: usize) -> Option<f64> {
    let mut v = start_vector(a.ncols());
    let mut w = DVector::zeros(a.nrows());
    let mut u = DVector::zeros(a.ncols());
    for _ in 0..max_iters {
        w.gemv(1.0, a, &v, 0.0);
        let lambda = w.norm_squared();
        u.gemv_tr(1.0, a, &w, 0.0);
        let unorm = u.norm();
        if unorm == 0.0 || !unorm.is_finite() {
            return None;
        }
        let residual = (&u - lambda * &v).norm();
        if residual <= tol * lambda {
            return Some(lambda.sqrt());
        }
        v.copy_from(&u);
        v /= unorm;
    }
    None
}

// Fixed pseudo-random start so results are reproducible and the start is
// not orthogonal to structured singular vectors (as an all-ones vector can be).
fn start_vector(len: usize) -> DVector<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15_u64;
    let mut v = DVector::from_fn(len, |_, _| {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        0.5 + (z >> 11) as f64 / (1u64 << 53) as f64
    });
    let norm = v.norm();
    v /= norm;
    v
}

/// Trace inner product `Tr(AᵀB)`.
pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `dst += c·src`, entrywise.
pub fn add_scaled(dst: &mut DMatrix<f64>, c: f64, src: &DMatrix<f64>) {
    dst.zip_apply(src, |d, s| *d += c * s);
}

/// Entrywise ℓ₁ norm `‖A‖_{1,1}`.
pub fn l1_norm(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// Builds a matrix from row-major data.
pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

/// Row-major copy of the entries of `a`.
pub fn to_row_major(a: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// Square matrix from row-major data whose length must be a perfect square.
pub fn square_from_row_major(data: &[f64]) -> Result<DMatrix<f64>> {
    let n = (data.len() as f64).sqrt().round() as usize;
    if n * n != data.len() || n == 0 {
        return Err(Error::Dimension(format!(
            "{} entries do not form a non-empty square matrix",
            data.len()
        )));
    }
    from_row_major(n, n, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_matches_svd() {
        let a = DMatrix::from_row_slice(3, 3, &[0.3, -0.2, 0.1, 0.05, 0.4, -0.3, 0.2, 0.1, 0.25]);
        assert!((spectral_norm(&a) - svd_spectral_norm(&a)).abs() < 1e-12);
    }

    #[test]
    fn rectangular_and_degenerate_inputs() {
        let wide = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 3.0, 0.0, 1.0]);
        assert!((spectral_norm(&wide) - svd_spectral_norm(&wide)).abs() < 1e-12);
        assert_eq!(spectral_norm(&DMatrix::zeros(3, 3)), 0.0);
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!((spectral_norm(&nil) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn row_major_layout() {
        let a = from_row_major(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(a[(0, 2)], 3.0);
        assert_eq!(a[(1, 0)], 4.0);
        assert_eq!(to_row_major(&a), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(from_row_major(2, 2, &[1.0]).is_err());
        assert!(square_from_row_major(&[1.0, 2.0, 3.0]).is_err());
    }
}
