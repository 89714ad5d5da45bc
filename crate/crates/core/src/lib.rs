//! Split-sample Gaussian mean testing.
//!
//! Given `2n` i.i.d. samples from a distribution on `R^d`, the tester sums each
//! half, takes the inner product of the two sums scaled by `1/n^2`, and
//! accepts the hypothesis `p = N(0, I_d)` when that statistic is at most
//! `sqrt(3d)/n` in absolute value. With `n = 25 C*^2 sqrt(d) / eps^2` samples
//! per half it separates the standard Gaussian from any Gaussian whose mean
//! has norm at least `eps`, whatever its covariance, in a single `O(nd)` pass.
//!
//! The crate is organised as:
//!
//! * [`tester`]: sample-size rule, the streaming statistic and the decision.
//! * [`distributions`]: seeded samplers for the Gaussian and product
//!   log-concave families used by the experiments.
//! * [`baselines`]: the biased unsplit plug-in statistic and the sign map.
//! * [`experiments`]: the Monte Carlo harness (acceptance rates with Wilson
//!   intervals, moment audits, empirical sample complexity, small-ball
//!   calibration of `C*`).
//! * [`exec`]: trial-level parallelism (rayon behind the `parallel` feature).

pub mod baselines;
pub mod distributions;
mod error;
pub mod exec;
pub mod experiments;
mod seed;
pub mod tester;

pub use crate::baselines::{sign_map, sign_mean_norm, unsplit_plugin, BaselineKind, BaselineStatistic};
pub use crate::distributions::{CovFactor, DistributionSpec, Family};
pub use crate::error::{Error, Result};
pub use crate::exec::Execution;
pub use crate::seed::Seed;
pub use crate::tester::{
    compute_statistic, cw_soundness_bound, decide, required_sample_size, run_tester, threshold,
    Decision, SampleBatch, StatisticAccumulator, TestStatistic, TesterConfig, Verdict,
    DEFAULT_C_STAR,
};
