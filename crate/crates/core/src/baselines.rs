//! Reference statistics for comparison with the split statistic.
//!
//! The unsplit plug-in `||mean||^2` reuses every sample in both factors of the
//! inner product and is biased upward by `tr(Sigma)/n`. The sign map sends each
//! coordinate to `+-1`, turning `N(0, I)` into the uniform distribution on the
//! hypercube.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tester::SampleBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BaselineKind {
    UnsplitPlugin,
    SignMeanNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineStatistic {
    pub kind: BaselineKind,
    pub value: f64,
    pub n: usize,
    pub dim: usize,
}

/// `||(1/n) sum_i X_i||^2` over all rows.
pub fn unsplit_plugin(samples: &SampleBatch) -> Result<BaselineStatistic> {
    Ok(BaselineStatistic {
        kind: BaselineKind::UnsplitPlugin,
        value: squared_mean_norm(samples)?,
        n: samples.count(),
        dim: samples.dim(),
    })
}

/// Coordinatewise sign, with `sign(0) = +1`.
pub fn sign_map(samples: &SampleBatch) -> Result<SampleBatch> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("sign map of an empty batch".into()));
    }
    let data = samples.as_slice().iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    Ok(SampleBatch::from_trusted(samples.dim(), data))
}

/// Squared norm of the hypercube sample mean after the sign map.
pub fn sign_mean_norm(samples: &SampleBatch) -> Result<BaselineStatistic> {
    let signs = sign_map(samples)?;
    Ok(BaselineStatistic {
        kind: BaselineKind::SignMeanNorm,
        value: squared_mean_norm(&signs)?,
        n: samples.count(),
        dim: samples.dim(),
    })
}

fn squared_mean_norm(samples: &SampleBatch) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("plug-in statistic of an empty batch".into()));
    }
    let mut sum = vec![0.0; samples.dim()];
    for row in samples.rows() {
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
    }
    let n = samples.count() as f64;
    Ok(sum.iter().map(|s| s * s).sum::<f64>() / (n * n))
}
