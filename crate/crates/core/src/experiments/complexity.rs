use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{ensure_positive, Error, Result};
use crate::exec::Execution;
use crate::seed::Seed;
use crate::tester::{dot, threshold};

/// Empirical rates of the tester at one per-half sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatesAtN {
    pub n: usize,
    /// Acceptance rate under `N(0, I_d)`.
    pub completeness: f64,
    /// Rejection rate under `N(eps e_1, I_d)`.
    pub soundness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityOutcome {
    /// Smallest passing `n` found, within the search tolerance.
    pub n: usize,
    /// Every evaluated candidate, in evaluation order.
    pub evaluations: Vec<RatesAtN>,
}

/// Search for the smallest per-half sample size at which the tester, with its
/// `sqrt(3d)/n` threshold, reaches `target` for both completeness and
/// soundness.
///
/// Half sums are drawn directly as `N(n mu, n I)`, which has exactly the law of
/// a sum of `n` Gaussian rows, so each trial costs `O(d)` whatever `n` is.
/// Trial `t` reuses the same underlying normal draws at every candidate `n`,
/// which keeps the estimated rates nearly monotone in `n`.
#[derive(Debug, Clone)]
pub struct ComplexitySearch {
    pub dim: usize,
    pub epsilon: f64,
    pub target: f64,
    pub trials: usize,
    pub seed: Seed,
    /// Stop doubling past this size and report failure.
    pub max_n: usize,
    /// Relative width at which bisection stops.
    pub tolerance: f64,
    pub execution: Execution,
}

impl ComplexitySearch {
    pub fn new(dim: usize, epsilon: f64, target: f64, trials: usize, seed: Seed) -> Self {
        ComplexitySearch {
            dim,
            epsilon,
            target,
            trials,
            seed,
            max_n: 1 << 26,
            tolerance: 0.05,
            execution: Execution::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim must be >= 1"));
        }
        ensure_positive("epsilon", self.epsilon)?;
        if !(self.target > 0.5 && self.target < 1.0) {
            return Err(Error::invalid(format!("target must lie in (0.5, 1), got {}", self.target)));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.max_n == 0 {
            return Err(Error::invalid("max_n must be >= 1"));
        }
        ensure_positive("tolerance", self.tolerance)
    }

    pub fn rates_at(&self, n: usize) -> Result<RatesAtN> {
        let thr = threshold(self.dim, n)?;
        let nf = n as f64;
        let null = DistributionSpec::standard_gaussian(self.dim);
        let mut mu = vec![0.0; self.dim];
        mu[0] = self.epsilon;
        let alt = DistributionSpec::gaussian(mu, None);

        let count = |spec: &DistributionSpec, stream: u64, accept: bool| -> usize {
            let seed = self.seed.substream(stream);
            self.execution
                .map_indexed(self.trials, |t| {
                    let mut rng = seed.trial(t as u64).rng();
                    let sx = spec.sample_sum(n, &mut rng);
                    let sy = spec.sample_sum(n, &mut rng);
                    let z = dot(&sx, &sy) / (nf * nf);
                    (z.abs() <= thr) == accept
                })
                .into_iter()
                .filter(|&hit| hit)
                .count()
        };
        let t = self.trials as f64;
        Ok(RatesAtN {
            n,
            completeness: count(&null, 0, true) as f64 / t,
            soundness: count(&alt, 1, false) as f64 / t,
        })
    }

    pub fn run(&self) -> Result<ComplexityOutcome> {
        self.validate()?;
        let mut evaluations = Vec::new();
        let mut passes = |n: usize| -> Result<bool> {
            let r = self.rates_at(n)?;
            evaluations.push(r);
            Ok(r.completeness >= self.target && r.soundness >= self.target)
        };

        // Doubling phase: find hi passing with lo = hi/2 failing.
        let mut lo = 0usize;
        let mut hi = 1usize;
        while !passes(hi)? {
            if hi >= self.max_n {
                let last = evaluations.last().copied();
                return Err(Error::NotAchievable(format!(
                    "no n <= {} reaches target {} (dim={}, epsilon={}); last rates: {last:?}",
                    self.max_n, self.target, self.dim, self.epsilon
                )));
            }
            lo = hi;
            hi = (hi * 2).min(self.max_n);
        }

        // Bisection until hi is within the relative tolerance of lo.
        while hi - lo > 1 && (hi as f64) > (1.0 + self.tolerance) * lo as f64 {
            let mid = lo + (hi - lo) / 2;
            if passes(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(ComplexityOutcome { n: hi, evaluations })
    }
}

/// Smallest per-half sample size (within 5%) at which both empirical
/// completeness and soundness reach `target`.
pub fn empirical_sample_complexity(
    dim: usize,
    epsilon: f64,
    target: f64,
    trials: usize,
    seed: Seed,
) -> Result<usize> {
    ComplexitySearch::new(dim, epsilon, target, trials, seed).run().map(|o| o.n)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("slope needs two or more paired points"));
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("log-log slope needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("x values are all equal"));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() + 1.5).abs() < 1e-12);
        assert!(log_log_slope(&[1.0], &[1.0]).is_err());
        assert!(log_log_slope(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(log_log_slope(&[1.0, 0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn target_must_be_above_half() {
        for t in [0.5, 1.0, 0.2, f64::NAN] {
            assert!(empirical_sample_complexity(4, 1.0, t, 10, Seed::new(1)).is_err());
        }
    }

    #[test]
    fn unreachable_target_reports_diagnostics() {
        // Null acceptance is P(|<g, g'>| <= sqrt(3d)) regardless of n, about
        // 0.87 at d = 1, so 0.99 can never be met.
        let mut search = ComplexitySearch::new(1, 1.0, 0.99, 400, Seed::new(3));
        search.max_n = 64;
        match search.run() {
            Err(Error::NotAchievable(msg)) => assert!(msg.contains("last rates")),
            other => panic!("expected NotAchievable, got {other:?}"),
        }
    }

    #[test]
    fn smaller_epsilon_needs_more_samples() {
        let a = empirical_sample_complexity(32, 0.5, 0.75, 1000, Seed::new(5)).unwrap();
        let b = empirical_sample_complexity(32, 0.25, 0.75, 1000, Seed::new(5)).unwrap();
        assert!(b >= a, "{b} < {a}");
    }

    #[test]
    fn search_is_deterministic() {
        let s = ComplexitySearch::new(16, 0.5, 0.7, 300, Seed::new(9));
        let a = s.run().unwrap();
        let b = ComplexitySearch { execution: Execution::Sequential, ..s }.run().unwrap();
        assert_eq!(a, b);
        let last_pass = a.evaluations.iter().find(|r| r.n == a.n).unwrap();
        assert!(last_pass.completeness >= 0.7 && last_pass.soundness >= 0.7);
    }
}
