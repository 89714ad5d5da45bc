use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::seed::Seed;
use crate::tester::dot;

/// Small-ball radii `alpha = 2^k` for these exponents.
pub const ALPHA_GRID_EXPONENTS: std::ops::RangeInclusive<i32> = -10..=0;

/// `max_alpha P(|w| <= alpha ||w||_2) / sqrt(alpha)` over the alpha grid, with
/// the probability and the `L2` norm both estimated from `samples`.
///
/// Returns `None` when the samples are (numerically) constant, where the
/// ratio carries no information about anti-concentration.
pub fn small_ball_ratio(samples: &[f64]) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = lo.abs().max(hi.abs());
    if !(hi - lo > 1e-12 * scale) {
        return None;
    }
    let l2 = (samples.iter().map(|w| w * w).sum::<f64>() / samples.len() as f64).sqrt();
    let mut abs: Vec<f64> = samples.iter().map(|w| w.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let total = abs.len() as f64;
    ALPHA_GRID_EXPONENTS
        .map(|k| {
            let alpha = 2f64.powi(k);
            let radius = alpha * l2;
            let inside = abs.partition_point(|&w| w <= radius) as f64;
            inside / total / alpha.sqrt()
        })
        .reduce(f64::max)
}

/// Empirical stand-in for the anti-concentration constant `C*`, restricted to
/// the statistics produced by `specs`.
///
/// For each spec this draws `trials` values of `Z` with one sample per half.
/// That loses no generality: `Z` at `n` samples per half has the law of
/// `Z` at one sample from the spec with its covariance divided by `n`.
/// Specs whose `Z` is constant are skipped with a warning.
pub fn calibrate_cstar(dim: usize, specs: &[DistributionSpec], trials: usize, seed: Seed) -> Result<f64> {
    calibrate_cstar_with(dim, specs, trials, seed, Execution::default())
}

pub fn calibrate_cstar_with(
    dim: usize,
    specs: &[DistributionSpec],
    trials: usize,
    seed: Seed,
    exec: Execution,
) -> Result<f64> {
    if specs.is_empty() {
        return Err(Error::invalid("calibration needs at least one spec"));
    }
    if trials < 2 {
        return Err(Error::invalid("calibration needs at least two trials"));
    }
    let mut best: Option<f64> = None;
    for (i, spec) in specs.iter().enumerate() {
        spec.validate().map_err(|e| Error::invalid(format!("specs[{i}]: {e}")))?;
        if spec.dim != dim {
            return Err(Error::Shape(format!("specs[{i}] has dim {}, expected {dim}", spec.dim)));
        }
        if spec.mean.iter().all(|&m| m == 0.0) {
            return Err(Error::invalid(format!("specs[{i}] must have a nonzero mean")));
        }
        let stream = seed.substream(i as u64);
        let zs = exec.map_indexed(trials, |t| {
            let mut rng = stream.trial(t as u64).rng();
            let x = spec.sample_sum(1, &mut rng);
            let y = spec.sample_sum(1, &mut rng);
            dot(&x, &y)
        });
        match small_ball_ratio(&zs) {
            Some(r) => {
                log::debug!("specs[{i}]: small-ball ratio {r:.4}");
                best = Some(best.map_or(r, |b: f64| b.max(r)));
            }
            None => log::warn!("specs[{i}]: statistic is constant, skipping"),
        }
    }
    best.ok_or_else(|| Error::invalid("every spec produced a constant statistic"))
}
