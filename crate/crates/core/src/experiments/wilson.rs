/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials`.
///
/// Returns `(0, 1)` when there are no trials. The interval always contains
/// the point estimate and stays inside `[0, 1]`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        // 8/10 at 95%: (0.4902, 0.9433)
        let (lo, hi) = wilson_interval(8, 10, Z_95);
        assert!((lo - 0.490_16).abs() < 1e-4, "{lo}");
        assert!((hi - 0.943_32).abs() < 1e-4, "{hi}");
        // 0/20: upper bound z^2/(n+z^2)
        let (lo, hi) = wilson_interval(0, 20, Z_95);
        assert_eq!(lo, 0.0);
        assert!((hi - Z_95 * Z_95 / (20.0 + Z_95 * Z_95)).abs() < 1e-12);
        assert_eq!(wilson_interval(0, 0, Z_95), (0.0, 1.0));
    }

    proptest! {
        #[test]
        fn contains_estimate(trials in 1usize..5000, frac in 0.0f64..=1.0) {
            let k = ((trials as f64) * frac).round() as usize;
            let (lo, hi) = wilson_interval(k, trials, Z_95);
            let p = k as f64 / trials as f64;
            prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
    }
}
