use meantest_core::experiments::{run_experiment_with, wilson_interval, ExperimentPlan, GridEntry, Z_95};
use meantest_core::{
    compute_statistic, decide, sign_map, DistributionSpec, Execution, Family, SampleBatch, Seed, TestStatistic,
    TesterConfig, Verdict,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn halves() -> impl Strategy<Value = (SampleBatch, SampleBatch)> {
    (1usize..10, 1usize..20).prop_flat_map(|(d, n)| {
        let half = move || proptest::collection::vec(-50.0f64..50.0, n * d).prop_map(move |v| SampleBatch::new(d, v).unwrap());
        (half(), half())
    })
}

/// Scale on which rounding in `<sum_x, sum_y> / n^2` is measured.
fn magnitude(x: &SampleBatch, y: &SampleBatch) -> f64 {
    let s = compute_statistic(x, y).unwrap();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (norm(&s.sum_x) * norm(&s.sum_y) / (s.n * s.n) as f64).max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn symmetric_in_the_halves((x, y) in halves()) {
        prop_assert_eq!(compute_statistic(&x, &y).unwrap().z, compute_statistic(&y, &x).unwrap().z);
    }

    #[test]
    fn rotation_invariant((x, y) in halves(), seed in any::<u64>()) {
        let d = x.dim();
        let mut rng = Seed::new(seed).rng();
        let g = DMatrix::from_fn(d, d, |_, _| rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal));
        let q = g.qr().q();
        let rotate = |b: &SampleBatch| {
            let rows: Vec<Vec<f64>> = b.rows().map(|r| (&q * DVector::from_column_slice(r)).as_slice().to_vec()).collect();
            SampleBatch::from_rows(&rows).unwrap()
        };
        let z = compute_statistic(&x, &y).unwrap().z;
        let rz = compute_statistic(&rotate(&x), &rotate(&y)).unwrap().z;
        prop_assert!((z - rz).abs() <= 1e-9 * magnitude(&x, &y), "{} vs {}", z, rz);
    }

    #[test]
    fn scale_equivariant((x, y) in halves(), s in 0.01f64..100.0) {
        let z = compute_statistic(&x, &y).unwrap().z;
        let sz = compute_statistic(&x.map(|v| v * s).unwrap(), &y.map(|v| v * s).unwrap()).unwrap().z;
        prop_assert!((sz - s * s * z).abs() <= 1e-12 * s * s * magnitude(&x, &y));
    }

    #[test]
    fn decision_matches_threshold(z in -10.0f64..10.0, d in 1usize..100, n in 1usize..100) {
        let cfg = TesterConfig::with_sample_size(1.0, d, 1.0, n).unwrap();
        let stat = TestStatistic { z, sum_x: vec![0.0; d], sum_y: vec![0.0; d], n };
        let verdict = decide(&stat, &cfg).unwrap().verdict;
        prop_assert_eq!(verdict == Verdict::Accept, z.abs() <= cfg.threshold());
        let tie = TestStatistic { z: cfg.threshold(), ..stat };
        prop_assert_eq!(decide(&tie, &cfg).unwrap().verdict, Verdict::Accept);
    }

    #[test]
    fn sign_map_output_is_binary(data in proptest::collection::vec(-1e3f64..1e3, 1..64)) {
        let b = SampleBatch::new(1, data).unwrap();
        let s = sign_map(&b).unwrap();
        prop_assert!(s.as_slice().iter().all(|&v| v == 1.0 || v == -1.0));
        prop_assert_eq!(sign_map(&s).unwrap(), s);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), trial in any::<u64>(), count in 1usize..20) {
        for family in [Family::Gaussian, Family::ProductLaplace, Family::ProductUniform, Family::ProductExponentialCentered] {
            let spec = DistributionSpec { dim: 3, family, mean: vec![0.1, -0.2, 0.3], cov_factor: None, scale: 0.7 };
            let s = Seed { value: seed, trial_index: trial };
            prop_assert_eq!(spec.sample(count, s).unwrap(), spec.sample(count, s).unwrap());
        }
    }

    #[test]
    fn wilson_contains_rate(k in 0usize..500, extra in 0usize..500) {
        let t = k + extra;
        prop_assume!(t > 0);
        let (lo, hi) = wilson_interval(k, t, Z_95);
        let p = k as f64 / t as f64;
        prop_assert!(lo <= p && p <= hi);
    }
}

#[test]
fn experiment_results_are_schedule_independent() {
    let mut mu = vec![0.0; 6];
    mu[2] = 0.8;
    let plan = ExperimentPlan {
        name: "schedule".into(),
        tester_config_grid: vec![GridEntry::new(1.0, 6, 1.0), GridEntry { n_override: Some(9), ..GridEntry::new(0.5, 6, 1.0) }],
        null_spec: DistributionSpec::standard_gaussian(6),
        alt_specs: vec![DistributionSpec::gaussian(mu, None), DistributionSpec::product(Family::ProductLaplace, vec![0.5; 6], 1.0)],
        trials: 300,
        base_seed: Seed::new(77),
        record_timing: false,
    };
    let seq = run_experiment_with(&plan, Execution::Sequential).unwrap();
    let par = run_experiment_with(&plan, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    assert_eq!(seq.per_cell.len(), 6);
    for cell in &seq.per_cell {
        assert!((0.0..=1.0).contains(&cell.accept_rate));
        assert!(cell.wilson_ci.0 <= cell.accept_rate && cell.accept_rate <= cell.wilson_ci.1);
        assert_eq!(cell.completed_trials, 300);
    }
    // A different base seed changes the draws.
    let other = run_experiment_with(&ExperimentPlan { base_seed: Seed::new(78), ..plan }, Execution::Sequential).unwrap();
    assert_ne!(other.per_cell[0].mean_z, seq.per_cell[0].mean_z);
}

#[test]
fn plan_json_round_trip() {
    let text = r#"{
        "name": "demo",
        "tester_config_grid": [{"epsilon": 0.5, "dim": 4}, {"epsilon": 0.5, "dim": 4, "c_star": 2.0, "n_override": 10}],
        "null_spec": {"dim": 4, "family": "GAUSSIAN", "mean": [0, 0, 0, 0]},
        "alt_specs": [{"dim": 4, "family": "GAUSSIAN", "mean": [0.5, 0, 0, 0], "cov_factor": {"kind": "scalar", "std": 3.0}}],
        "trials": 10,
        "base_seed": {"value": 5}
    }"#;
    let plan: ExperimentPlan = serde_json::from_str(text).unwrap();
    plan.validate().unwrap();
    assert_eq!(plan.tester_config_grid[0].c_star, 1.0);
    assert!(!plan.record_timing);
    let again: ExperimentPlan = serde_json::from_str(&serde_json::to_string(&plan).unwrap()).unwrap();
    assert_eq!(again, plan);
}
