mod common;

use common::*;
use lds_id::geometry::*;
use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn descent_cone_projection_matches_active_set_enumeration() {
    let mut r = rng(4);
    for _ in 0..60 {
        let dim = r.random_range(2..=5);
        let k = r.random_range(1..dim);
        let mut idx: Vec<usize> = (0..dim).collect();
        for i in 0..k {
            let j = r.random_range(i..dim);
            idx.swap(i, j);
        }
        let mut support = idx[..k].to_vec();
        support.sort_unstable();
        let signs: Vec<f64> = (0..k)
            .map(|_| if r.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
        let (fast, _) = project_l1_descent_cone(&g, &support, &signs);
        let rows = l1_descent_cone_rows(dim, &support, &signs);
        let slow = polyhedral_cone_projection_oracle(&rows, &DVector::from_vec(g.clone()));
        let diff = (DVector::from_vec(fast) - slow).norm();
        assert!(diff <= 1e-8, "dim {dim} support {support:?}: {diff}");
    }
}

#[test]
fn descent_cone_projection_properties() {
    // Π(g) ∈ T and ⟨g − Π(g), Π(g)⟩ = 0 (Moreau).
    let mut r = rng(6);
    let (support, signs) = (vec![0, 7, 12], vec![1.0, -1.0, 1.0]);
    for _ in 0..200 {
        let g: Vec<f64> = (0..16).map(|_| StandardNormal.sample(&mut r)).collect();
        let (p, _) = project_l1_descent_cone(&g, &support, &signs);
        let on: f64 = support.iter().zip(&signs).map(|(&i, s)| s * p[i]).sum();
        let off: f64 = (0..16)
            .filter(|i| !support.contains(i))
            .map(|i| p[i].abs())
            .sum();
        assert!(on + off <= 1e-8);
        let cross: f64 = g.iter().zip(&p).map(|(a, b)| (a - b) * b).sum();
        assert!(cross.abs() <= 1e-8);
    }
}

#[test]
fn subspace_width_matches_chi_mean() {
    for d in [1, 10, 100] {
        let w =
            gaussian_width_mc(&TangentConeDescriptor::subspace(d).unwrap(), 10_000, 17).unwrap();
        let expected = chi_mean(d);
        assert!(
            (w.mean - expected).abs() <= 3.0 * w.std_err,
            "d={d}: {} vs {expected}",
            w.mean
        );
    }
}

#[test]
fn sparse_width_is_order_beta() {
    let mut a = nalgebra::DMatrix::<f64>::zeros(10, 10);
    for i in 0..10 {
        a[(i, (3 * i) % 10)] = if i % 2 == 0 { 0.5 } else { -0.25 };
    }
    let cone = TangentConeDescriptor::l1_descent_at(&a).unwrap();
    let w = gaussian_width_mc(&cone, 4000, 1).unwrap();
    let b = beta(10, 10).unwrap();
    assert!(
        w.mean <= 3.0 * b && w.mean >= b / 3.0,
        "{} vs β = {b}",
        w.mean
    );
}

#[test]
fn width_estimate_is_reproducible() {
    let cone = TangentConeDescriptor::subspace(7).unwrap();
    assert_eq!(
        gaussian_width_mc(&cone, 3000, 5).unwrap(),
        gaussian_width_mc(&cone, 3000, 5).unwrap()
    );
}

#[test]
fn subspace_width_lies_within_chi_mean_bounds() {
    for d in [2, 5, 50] {
        let w =
            gaussian_width_mc(&TangentConeDescriptor::subspace(d).unwrap(), 10_000, 23).unwrap();
        let (lo, hi) = (((d - 1) as f64).sqrt(), (d as f64).sqrt());
        assert!(
            w.mean >= lo - 3.0 * w.std_err && w.mean <= hi + 3.0 * w.std_err,
            "d={d}: {}",
            w.mean
        );
    }
}
