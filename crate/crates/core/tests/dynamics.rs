mod common;

use common::*;
use lds_id::dynamics::*;
use lds_id::json;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn gamma_factorises_the_state_sequence() {
    let mut r = rng(1);
    for case in 0..20u64 {
        let n = r.random_range(1..5);
        let horizon = r.random_range(1..40);
        let a = random_stable_matrix(n, 0.3 + 0.6 * r.random::<f64>(), None, case).unwrap();
        let model = LdsModel::new(a.clone()).unwrap();
        let traj = simulate(
            &model,
            NoiseSpec::new(NoiseFamily::Gaussian),
            horizon,
            10 + case,
        )
        .unwrap();
        let gamma = gamma_matrix(&a, horizon).unwrap();
        let xi = DVector::from_iterator(
            n * horizon,
            traj.noises()[..horizon]
                .iter()
                .flat_map(|e| e.iter().copied()),
        );
        let x = DVector::from_iterator(
            n * horizon,
            traj.states()[1..=horizon]
                .iter()
                .flat_map(|e| e.iter().copied()),
        );
        assert!((&gamma * xi - x).norm() <= 1e-10);
        assert!(svd_norm(&gamma) <= model.j() + 1e-8);
    }
}

#[test]
fn j_matches_explicit_partial_sums() {
    let mut r = rng(2);
    for _ in 0..10 {
        let n = r.random_range(1..=6);
        let m = random_diagonalizable(n, 0.85, &mut r);
        let expected = m.j_partial_sum(500);
        let j = stability_param_j(&m.a, 1e-12).unwrap();
        assert!(
            (j - expected).abs() <= 1e-8 * expected.max(1.0),
            "{j} vs {expected}"
        );
    }
}

#[test]
fn j_of_scaled_identity_is_geometric() {
    for a in [0.1, 0.5, 0.9] {
        let j = stability_param_j(&(DMatrix::identity(3, 3) * a), 1e-13).unwrap();
        assert!((j - 1.0 / (1.0 - a)).abs() <= 1e-10, "{a}: {j}");
    }
}

#[test]
fn j_upper_bounds_gamma_norm_for_non_normal_systems() {
    let a = DMatrix::from_row_slice(2, 2, &[0.5, 4.0, 0.0, 0.5]);
    let j = stability_param_j(&a, 1e-12).unwrap();
    for horizon in [1, 5, 20, 60] {
        assert!(svd_norm(&gamma_matrix(&a, horizon).unwrap()) <= j + 1e-8);
    }
}

#[test]
fn simulation_is_deterministic_in_the_seed() {
    let model = LdsModel::new(random_stable_matrix(4, 0.7, None, 3).unwrap()).unwrap();
    for family in [
        NoiseFamily::Gaussian,
        NoiseFamily::Rademacher,
        NoiseFamily::Uniform,
    ] {
        let spec = NoiseSpec::new(family);
        let a = simulate(&model, spec, 50, 99).unwrap();
        let b = simulate(&model, spec, 50, 99).unwrap();
        let c = simulate(&model, spec, 50, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

#[test]
fn document_roundtrip_is_bit_exact() {
    let model = LdsModel::new(random_stable_matrix(3, 0.8, Some(4), 5).unwrap()).unwrap();
    let spec = NoiseSpec::new(NoiseFamily::Uniform);
    let traj = simulate(&model, spec, 30, 6).unwrap();
    let doc = TrajectoryDocument::new(&model, &traj, 6, spec);
    let text = json::to_string_pretty(&doc).unwrap();
    let back: TrajectoryDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(back.trajectory().unwrap(), traj);
    assert_eq!(back.system_matrix().unwrap().unwrap(), *model.matrix());
}

#[test]
fn unstable_systems_are_rejected() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.2]);
    assert!(!LdsModel::new(a.clone()).unwrap().is_stable());
    assert!(matches!(
        stability_param_j(&a, 1e-12),
        Err(lds_id::Error::Instability { .. })
    ));
    let model = LdsModel::new(a).unwrap();
    assert!(simulate(&model, NoiseSpec::new(NoiseFamily::Gaussian), 5, 0).is_err());
}

proptest! {
    #[test]
    fn states_follow_the_recursion(seed in any::<u64>(), n in 1usize..5, horizon in 1usize..30) {
        let a = random_stable_matrix(n, 0.9, None, seed).unwrap();
        let model = LdsModel::new(a.clone()).unwrap();
        let traj = simulate(&model, NoiseSpec::new(NoiseFamily::Rademacher), horizon, seed).unwrap();
        prop_assert_eq!(traj.states().len(), horizon + 2);
        prop_assert!(traj.states()[0].iter().all(|&x| x == 0.0));
        for t in 0..=horizon {
            let expected = &a * &traj.states()[t] + &traj.noises()[t];
            prop_assert_eq!(&traj.states()[t + 1], &expected);
        }
    }
}

#[test]
fn j_dominates_and_respects_its_tolerance() {
    let mut r = rng(12);
    for case in 0..30 {
        let n = r.random_range(1..=6);
        let a = random_stable_matrix(n, 0.95 * r.random::<f64>() + 0.01, None, case).unwrap();
        let loose = stability_param_j(&a, 1e-6).unwrap();
        let tight = stability_param_j(&a, 1e-13).unwrap();
        assert!(tight >= 1.0f64.max(svd_norm(&a)) - 1e-12);
        assert!(tight - loose <= 1e-6 && tight >= loose);
        // A much longer explicit partial sum.
        let mut brute = 0.0;
        let mut p = DMatrix::<f64>::identity(n, n);
        for _ in 0..2000 {
            brute += svd_norm(&p);
            p = &p * &a;
        }
        assert!((tight - brute).abs() <= 1e-9 * brute, "{tight} vs {brute}");
    }
}
