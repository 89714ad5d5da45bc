use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::seed::Seed;
use crate::tester::split_statistic;

use super::mean_var;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentAudit {
    pub mean_z: f64,
    pub var_z: f64,
    pub predicted_mean: f64,
    pub predicted_var: f64,
}

/// Exact first two moments of `Z` with `n` samples per half:
/// `E[Z] = ||mu||^2` and `Var[Z] = ||Sigma||_F^2 / n^2 + 2 mu^T Sigma mu / n`.
///
/// The variance only uses independence of the halves and second moments of the
/// half sums, so it holds for every family, not just Gaussians.
pub fn predicted_moments(spec: &DistributionSpec, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let mu = spec.mean_of()?;
    let nf = n as f64;
    let mean = mu.iter().map(|m| m * m).sum();
    let frob = spec.covariance_frobenius()?;
    let var = frob * frob / (nf * nf) + 2.0 * spec.covariance_quadratic_form(&mu)? / nf;
    Ok((mean, var))
}

/// Estimates `E[Z]` and `Var[Z]` over `trials` draws of `2n` raw samples.
pub fn moment_audit(spec: &DistributionSpec, n: usize, trials: usize, seed: Seed) -> Result<MomentAudit> {
    moment_audit_with(spec, n, trials, seed, Execution::default())
}

pub fn moment_audit_with(
    spec: &DistributionSpec,
    n: usize,
    trials: usize,
    seed: Seed,
    exec: Execution,
) -> Result<MomentAudit> {
    if trials < 1000 {
        return Err(Error::invalid(format!("moment audit needs >= 1000 trials, got {trials}")));
    }
    let (predicted_mean, predicted_var) = predicted_moments(spec, n)?;
    let zs = exec
        .map_indexed(trials, |t| {
            let batch = spec.sample(2 * n, seed.trial(t as u64))?;
            split_statistic(&batch, n).map(|s| s.z)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let (mean_z, var_z) = mean_var(&zs);
    Ok(MomentAudit { mean_z, var_z, predicted_mean, predicted_var })
}
