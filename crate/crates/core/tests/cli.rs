use lds_id::cli::{run, EXIT_DIVERGENCE, EXIT_OK, EXIT_PARAMETER, EXIT_SCHEMA, EXIT_SWEEP_FAILED};
use serde_json::{json, Value};
use std::path::Path;

fn lds(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["lds-id"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_writes_t_plus_two_states_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let (code, _, err) = lds(&[
            "simulate",
            "--n",
            "5",
            "--T",
            "100",
            "--spec-norm",
            "0.8",
            "--seed",
            "7",
            "--out",
            p(&out),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        runs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    let doc = read(&out);
    assert_eq!(doc["states"].as_array().unwrap().len(), 102);
    assert_eq!(doc["n"], 5);
}

#[test]
fn unstable_system_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    let a_file = dir.path().join("A.json");
    std::fs::write(
        &a_file,
        json!({"n": 2, "A": [1.2, 0.0, 0.0, 0.1]}).to_string(),
    )
    .unwrap();
    let (code, _, err) = lds(&[
        "simulate",
        "--T",
        "10",
        "--a-file",
        p(&a_file),
        "--out",
        p(&dir.path().join("t.json")),
    ]);
    assert_eq!(code, EXIT_PARAMETER);
    assert!(err.contains("1.2"), "{err}");
}

#[test]
fn estimate_ols_recovers_noiseless_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("traj.json");
    // x_{t+1} = A x_t + η_t with only η_1 nonzero.
    let a = [[0.5, 0.1], [0.0, 0.3]];
    let mut states = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
    for _ in 0..10 {
        let x = states.last().unwrap().clone();
        states.push(vec![
            a[0][0] * x[0] + a[0][1] * x[1],
            a[1][0] * x[0] + a[1][1] * x[1],
        ]);
    }
    std::fs::write(
        &input,
        json!({"n": 2, "T": 10, "states": states}).to_string(),
    )
    .unwrap();
    let out = dir.path().join("est.json");
    let (code, _, err) = lds(&[
        "estimate",
        "--input",
        p(&input),
        "--constraint",
        "ols",
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let a_hat: Vec<f64> = serde_json::from_value(read(&out)["A_hat"].clone()).unwrap();
    let expected = [0.5, 0.1, 0.0, 0.3];
    for (x, y) in a_hat.iter().zip(expected) {
        assert!((x - y).abs() <= 1e-8, "{a_hat:?}");
    }
}

#[test]
fn estimate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.json");
    let (code, _, _) = lds(&[
        "simulate",
        "--n",
        "3",
        "--T",
        "200",
        "--spec-norm",
        "0.7",
        "--sparsity",
        "3",
        "--out",
        p(&traj),
    ]);
    assert_eq!(code, EXIT_OK);
    let out = dir.path().join("est.json");

    let (code, _, err) = lds(&[
        "estimate",
        "--input",
        p(&traj),
        "--constraint",
        "l1:oracle",
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let est = read(&out);
    assert_eq!(est["converged"], true);
    assert_eq!(est["first_order"]["violated"], false);

    let (code, _, _) = lds(&[
        "estimate",
        "--input",
        p(&traj),
        "--constraint",
        "unconstrained",
        "--step",
        "fixed:1000",
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_DIVERGENCE);

    let (code, _, _) = lds(&[
        "estimate",
        "--input",
        p(&traj),
        "--constraint",
        "l1:-1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_PARAMETER);

    let bad_basis = dir.path().join("basis.json");
    std::fs::write(
        &bad_basis,
        json!({"n": 3, "basis": [[1.0, 2.0]]}).to_string(),
    )
    .unwrap();
    let arg = format!("subspace:{}", p(&bad_basis));
    let (code, _, _) = lds(&[
        "estimate",
        "--input",
        p(&traj),
        "--constraint",
        &arg,
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_SCHEMA);

    // Without A* in the file the oracle radius is unavailable.
    let mut doc = read(&traj);
    doc.as_object_mut().unwrap().remove("A");
    let stripped = dir.path().join("stripped.json");
    std::fs::write(&stripped, doc.to_string()).unwrap();
    let (code, _, _) = lds(&[
        "estimate",
        "--input",
        p(&stripped),
        "--constraint",
        "l1:oracle",
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_SCHEMA);
}

#[test]
fn complexity_table_for_full_subspace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let (code, _, err) = lds(&[
        "complexity",
        "--scenario",
        "subspace",
        "--n",
        "4",
        "--d",
        "16",
        "--T",
        "100,1000",
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let c = read(&out);
    assert_eq!(c["gamma1_spec_bound"]["value"], 16.0);
    assert_eq!(c["gamma2_frob_bound"]["value"], 4.0);
    assert_eq!(c["error_bound"].as_array().unwrap().len(), 2);

    let (code, _, _) = lds(&[
        "complexity",
        "--scenario",
        "sparse",
        "--n",
        "4",
        "--k",
        "4",
        "--delta",
        "1.5",
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_PARAMETER);
}

#[test]
fn experiment_outputs_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    std::fs::write(
        &plan,
        json!({"scenario": "sparse", "n_grid": [3], "T_grid": [50], "k_grid": [3],
               "trials": 1, "target_spec_norm": 0.5, "base_seed": 1})
        .to_string(),
    )
    .unwrap();
    let (o1, o2) = (dir.path().join("o1"), dir.path().join("o2"));
    let (code, _, err) = lds(&["experiment", "--plan", p(&plan), "--out", p(&o1)]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (code, _, _) = lds(&[
        "experiment",
        "--plan",
        p(&plan),
        "--threads",
        "1",
        "--out",
        p(&o2),
    ]);
    assert_eq!(code, EXIT_OK);
    let csv = std::fs::read_to_string(o1.join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    for f in ["records.csv", "records.jsonl", "summary.json"] {
        assert_eq!(
            std::fs::read(o1.join(f)).unwrap(),
            std::fs::read(o2.join(f)).unwrap(),
            "{f}"
        );
    }

    std::fs::write(
        &plan,
        json!({"scenario": "sparse", "n_grid": [3]}).to_string(),
    )
    .unwrap();
    let (code, _, _) = lds(&["experiment", "--plan", p(&plan), "--out", p(&o1)]);
    assert_eq!(code, EXIT_SCHEMA);

    std::fs::write(
        &plan,
        json!({"scenario": "unconstrained", "n_grid": [3], "T_grid": [50], "trials": 2,
               "target_spec_norm": 0.5, "base_seed": 1,
               "solver": {"max_iters": 100, "step_rule": {"rule": "fixed", "eta": 1000.0}}})
        .to_string(),
    )
    .unwrap();
    let (code, _, _) = lds(&["experiment", "--plan", p(&plan), "--out", p(&o1)]);
    assert_eq!(code, EXIT_SWEEP_FAILED);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        json!({"n": 2, "T": 5, "spec_norm": 0.5, "seed": 1}).to_string(),
    )
    .unwrap();
    let out = dir.path().join("t.json");
    let (code, _, err) = lds(&[
        "simulate",
        "--config",
        p(&cfg),
        "--T",
        "8",
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let doc = read(&out);
    assert_eq!(doc["T"], 8);
    assert_eq!(doc["seed"], 1);

    std::fs::write(&cfg, json!({"n": 2, "bogus": 1}).to_string()).unwrap();
    let (code, _, _) = lds(&["simulate", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code, EXIT_SCHEMA);
}
