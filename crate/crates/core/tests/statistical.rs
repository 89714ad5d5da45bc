//! Statistical behaviour of the tester checked against independent oracles.

use meantest_core::experiments::{moment_audit, predicted_moments, run_experiment, ExperimentPlan, GridEntry};
use meantest_core::{
    compute_statistic, run_tester, DistributionSpec, Family, SampleBatch, Seed, Verdict,
};

/// Exact mean and variance of Z by enumerating every assignment of support
/// points to the 2n sample slots of a finite distribution.
fn enumerate_moments(points: &[[f64; 2]], probs: &[f64], n: usize) -> (f64, f64) {
    let k = points.len();
    let slots = 2 * n;
    let total = k.pow(slots as u32);
    let (mut m1, mut m2) = (0.0, 0.0);
    for code in 0..total {
        let mut c = code;
        let mut p = 1.0;
        let (mut sx, mut sy) = ([0.0; 2], [0.0; 2]);
        for slot in 0..slots {
            let idx = c % k;
            c /= k;
            p *= probs[idx];
            let target = if slot < n { &mut sx } else { &mut sy };
            target[0] += points[idx][0];
            target[1] += points[idx][1];
        }
        let z = (sx[0] * sy[0] + sx[1] * sy[1]) / (n * n) as f64;
        m1 += p * z;
        m2 += p * z * z;
    }
    (m1, m2 - m1 * m1)
}

#[test]
fn variance_formula_matches_exact_enumeration() {
    // Skewed three-point law in R^2 with correlated coordinates.
    let points = [[2.0, 0.5], [-1.0, 1.0], [0.5, -2.0]];
    let probs = [0.5, 0.3, 0.2];
    let mu: Vec<f64> = (0..2).map(|j| points.iter().zip(&probs).map(|(x, p)| p * x[j]).sum()).collect();
    let mut sigma = [[0.0; 2]; 2];
    for (x, p) in points.iter().zip(&probs) {
        for a in 0..2 {
            for b in 0..2 {
                sigma[a][b] += p * (x[a] - mu[a]) * (x[b] - mu[b]);
            }
        }
    }
    let frob2: f64 = sigma.iter().flatten().map(|s| s * s).sum();
    let quad: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| mu[a] * sigma[a][b] * mu[b]).sum();
    for n in 1..=3 {
        let (mean, var) = enumerate_moments(&points, &probs, n);
        let nf = n as f64;
        let formula = frob2 / (nf * nf) + 2.0 * quad / nf;
        assert!((mean - (mu[0] * mu[0] + mu[1] * mu[1])).abs() < 1e-12, "n={n}");
        assert!((var - formula).abs() < 1e-12, "n={n}: {var} vs {formula}");
    }
}

#[test]
fn variance_formula_matches_monte_carlo_off_null() {
    let d = 8;
    let mut mu = vec![0.0; d];
    mu[0] = 0.7;
    mu[3] = -0.4;
    let u = 1.0 / (d as f64).sqrt();
    let cov: Vec<Vec<f64>> =
        (0..d).map(|i| (0..d).map(|j| if i == j { 2.0 } else { 0.0 } + 5.0 * u * u).collect()).collect();
    let spec = DistributionSpec::gaussian_with_covariance(mu, &cov).unwrap();
    let audit = moment_audit(&spec, 20, 20_000, Seed::new(31)).unwrap();
    let (pm, pv) = predicted_moments(&spec, 20).unwrap();
    assert_eq!((audit.predicted_mean, audit.predicted_var), (pm, pv));
    assert!((audit.mean_z - pm).abs() < 4.0 * (pv / 20_000.0).sqrt(), "{audit:?}");
    assert!((audit.var_z / pv - 1.0).abs() < 0.15, "{audit:?}");
}

#[test]
fn variance_formula_holds_for_log_concave_families() {
    for family in [Family::ProductLaplace, Family::ProductUniform, Family::ProductExponentialCentered] {
        let spec = DistributionSpec::product(family, vec![0.3, 0.0, -0.2, 0.1], 1.3);
        let audit = moment_audit(&spec, 10, 20_000, Seed::new(32)).unwrap();
        assert!((audit.var_z / audit.predicted_var - 1.0).abs() < 0.15, "{family:?}: {audit:?}");
        assert!((audit.mean_z - audit.predicted_mean).abs() < 4.0 * (audit.predicted_var / 20_000.0).sqrt());
    }
}

#[test]
fn gaussian_null_passes_at_rule_sample_size() {
    // Over independent seeds, iid N(0, I_32) data at the rule's n for eps=0.5
    // is accepted at least 2/3 of the time.
    let spec = DistributionSpec::standard_gaussian(32);
    let n = meantest_core::required_sample_size(0.5, 32, 1.0).unwrap();
    let trials = 2000;
    let accepts = (0..trials)
        .filter(|&t| {
            let batch = spec.sample(2 * n, Seed::new(40).trial(t)).unwrap();
            run_tester(&batch, 0.5, 1.0).unwrap().verdict == Verdict::Accept
        })
        .count();
    assert!(accepts as f64 / trials as f64 >= 2.0 / 3.0, "{accepts}/{trials}");
}

#[test]
fn small_mean_completeness_sweep() {
    // Small mean (||mu|| = c * eps) with ||Sigma||_F <= sqrt(d). The mean only
    // needs to be small enough: at the rule's n, n * ||mu||^2 = 25 sqrt(d) c^2,
    // which crosses the sqrt(3d) cutoff near c = 0.26, so acceptance falls off
    // across the sweep and only the small end is held to 2/3.
    let d = 32;
    let eps = 0.5;
    let mut rates = Vec::new();
    for c in [0.1, 0.2, 0.3] {
        let mut mu = vec![0.0; d];
        mu[0] = c * eps;
        let null = DistributionSpec::isotropic_gaussian(mu, 1.0);
        assert!(null.covariance_frobenius().unwrap() <= (d as f64).sqrt() + 1e-12);
        let plan = ExperimentPlan {
            name: "small-mean".into(),
            tester_config_grid: vec![GridEntry::new(eps, d, 1.0)],
            null_spec: null,
            alt_specs: vec![],
            trials: 2000,
            base_seed: Seed::new(41),
            record_timing: false,
        };
        let cell = run_experiment(&plan).unwrap().per_cell[0].clone();
        rates.push((c, cell.accept_rate, cell.wilson_ci.0));
    }
    eprintln!("small-mean sweep (c, accept, wilson_lo): {rates:?}");
    assert!(rates[0].2 > 2.0 / 3.0, "{rates:?}");
    assert!(rates.windows(2).all(|w| w[1].1 <= w[0].1), "{rates:?}");
}

#[test]
fn log_concave_alternatives_rejected() {
    let d = 32;
    let eps = 0.5;
    let alts: Vec<DistributionSpec> = [Family::ProductLaplace, Family::ProductUniform, Family::ProductExponentialCentered]
        .into_iter()
        .map(|f| {
            let mut mu = vec![0.0; d];
            mu[d - 1] = eps;
            DistributionSpec::product(f, mu, 1.0)
        })
        .collect();
    let plan = ExperimentPlan {
        name: "log-concave".into(),
        tester_config_grid: vec![GridEntry::new(eps, d, 1.0)],
        null_spec: DistributionSpec::standard_gaussian(d),
        alt_specs: alts,
        trials: 2000,
        base_seed: Seed::new(42),
        record_timing: false,
    };
    let result = run_experiment(&plan).unwrap();
    for cell in &result.per_cell[1..] {
        assert!(cell.reject_ci().0 > 2.0 / 3.0, "{:?}: {}", cell.spec.family, cell.reject_rate());
    }
}

#[test]
fn isotropic_large_variance_up_to_1000() {
    let d = 32;
    let mut mu = vec![0.0; d];
    mu[0] = 0.5;
    let plan = ExperimentPlan {
        name: "sigma-1000".into(),
        tester_config_grid: vec![GridEntry::new(0.5, d, 1.0)],
        null_spec: DistributionSpec::standard_gaussian(d),
        alt_specs: vec![DistributionSpec::isotropic_gaussian(mu, 1000.0)],
        trials: 2000,
        base_seed: Seed::new(43),
        record_timing: false,
    };
    let cell = &run_experiment(&plan).unwrap().per_cell[1];
    assert!(cell.reject_rate() >= 0.66, "{}", cell.reject_rate());
}

#[test]
fn split_statistic_is_unbiased_where_plugin_is_not() {
    let spec = DistributionSpec::gaussian(vec![1.0, 0.0, 0.0, 0.0], None);
    let n = 5;
    let trials = 20_000u64;
    let (mut split, mut plug) = (0.0, 0.0);
    for t in 0..trials {
        let b = spec.sample(2 * n, Seed::new(44).trial(t)).unwrap();
        let x = b.slice_rows(0, n).unwrap();
        let y = b.slice_rows(n, 2 * n).unwrap();
        split += compute_statistic(&x, &y).unwrap().z;
        plug += meantest_core::unsplit_plugin(&x).unwrap().value;
    }
    let (split, plug) = (split / trials as f64, plug / trials as f64);
    // E split = ||mu||^2 = 1; E plug = 1 + d/n = 1.8
    assert!((split - 1.0).abs() < 0.03, "{split}");
    assert!((plug - 1.8).abs() < 0.03, "{plug}");
}

#[test]
fn zero_batch_is_accepted_whatever_the_dimension() {
    for d in [1, 7, 64] {
        let b = SampleBatch::zeros(10, d).unwrap();
        assert_eq!(run_tester(&b, 1.0, 1.0).unwrap().verdict, Verdict::Accept);
    }
}
