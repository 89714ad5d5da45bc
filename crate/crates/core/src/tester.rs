//! The split-sample mean tester.
//!
//! Two halves of `n` samples each are summed in one pass; the statistic is
//! `Z = <sum_x, sum_y> / n^2`, which is unbiased for `||mu||^2` because the
//! halves are independent. The tester accepts when `|Z| <= sqrt(3d)/n`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Default anti-concentration constant. No numeric value is known; see
/// [`crate::experiments::calibrate_cstar`] for an empirical estimate.
pub const DEFAULT_C_STAR: f64 = 1.0;

/// Multiplier in the sample-size rule `n = 25 C*^2 sqrt(d) / eps^2`.
const SAMPLE_SIZE_FACTOR: f64 = 25.0;

/// Samples per half required for the guarantee:
/// `max(1, ceil(25 * c_star^2 * sqrt(dim) / epsilon^2))`.
pub fn required_sample_size(epsilon: f64, dim: usize, c_star: f64) -> Result<usize> {
    ensure_positive("epsilon", epsilon)?;
    ensure_positive("c_star", c_star)?;
    if dim == 0 {
        return Err(Error::invalid("dim must be >= 1"));
    }
    let raw = SAMPLE_SIZE_FACTOR * c_star * c_star * (dim as f64).sqrt() / (epsilon * epsilon);
    let n = raw.ceil();
    // 2^53 keeps the count exactly representable and far beyond any batch
    // that fits in memory.
    if !n.is_finite() || n > 9_007_199_254_740_992.0 {
        return Err(Error::invalid(format!(
            "sample size {raw:e} overflows for epsilon={epsilon}, dim={dim}, c_star={c_star}"
        )));
    }
    Ok((n as usize).max(1))
}

/// Acceptance cutoff on `|Z|`: `sqrt(3 * dim) / n`.
pub fn threshold(dim: usize, n: usize) -> Result<f64> {
    if dim == 0 || n == 0 {
        return Err(Error::invalid(format!("threshold needs dim >= 1 and n >= 1, got dim={dim}, n={n}")));
    }
    Ok((3.0 * dim as f64).sqrt() / n as f64)
}

/// Upper bound on `P(|Z| <= 2 sqrt(d)/n)` under any alternative with
/// `||mu|| >= epsilon`: `c_star * sqrt((2 sqrt(dim) / n) / epsilon^2)`.
///
/// It follows from the anti-concentration inequality for Gaussian quadratics,
/// `P(|p(G)| <= a ||p||_2) <= C* sqrt(a)`, with `a = (2 sqrt(d)/n) / ||Z||_2`
/// and `||Z||_2 >= E[Z] = ||mu||^2 >= eps^2`. At the prescribed sample size the
/// bound equals `sqrt(2)/5 < 1/3`.
///
/// The analysis radius `2 sqrt(d)/n` is larger than the decision threshold
/// `sqrt(3d)/n`, so the bound also covers the event the tester actually
/// accepts on. `n` is real-valued so the bound can be evaluated at the
/// unrounded sample size. Diagnostic only.
pub fn cw_soundness_bound(dim: usize, n: f64, epsilon: f64, c_star: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::invalid("dim must be >= 1"));
    }
    ensure_positive("n", n)?;
    ensure_positive("epsilon", epsilon)?;
    ensure_positive("c_star", c_star)?;
    let radius = 2.0 * (dim as f64).sqrt() / n;
    Ok(c_star * (radius / (epsilon * epsilon)).sqrt())
}

/// All tunables of one tester run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TesterConfig {
    epsilon: f64,
    dim: usize,
    c_star: f64,
    n: usize,
    threshold: f64,
}

impl TesterConfig {
    /// Derives `n` from the sample-size rule.
    pub fn new(epsilon: f64, dim: usize, c_star: f64) -> Result<Self> {
        let n = required_sample_size(epsilon, dim, c_star)?;
        Self::with_sample_size(epsilon, dim, c_star, n)
    }

    /// Uses an explicit per-half sample size instead of the rule.
    pub fn with_sample_size(epsilon: f64, dim: usize, c_star: f64, n: usize) -> Result<Self> {
        ensure_positive("epsilon", epsilon)?;
        ensure_positive("c_star", c_star)?;
        let threshold = threshold(dim, n)?;
        Ok(TesterConfig { epsilon, dim, c_star, n, threshold })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c_star(&self) -> f64 {
        self.c_star
    }

    /// Samples per half.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Whether `n` meets the sample-size rule for this configuration.
    pub fn meets_sample_size_rule(&self) -> bool {
        required_sample_size(self.epsilon, self.dim, self.c_star).is_ok_and(|req| self.n >= req)
    }
}

/// A row-major block of finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    dim: usize,
    count: usize,
    data: Vec<f64>,
}

impl SampleBatch {
    /// Wraps row-major `data`. Fails on a ragged length or a non-finite entry.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim must be >= 1"));
        }
        if data.len() % dim != 0 {
            return Err(Error::Shape(format!(
                "{} values do not form whole rows of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / dim, col: pos % dim });
        }
        let count = data.len() / dim;
        Ok(SampleBatch { dim, count, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("cannot infer dimension from zero rows"))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Shape(format!("row {i} has {} values, expected {dim}", row.len())));
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn zeros(count: usize, dim: usize) -> Result<Self> {
        Self::new(dim, vec![0.0; count * dim])
    }

    /// Caller guarantees finiteness and shape.
    pub(crate) fn from_trusted(dim: usize, data: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && data.len() % dim == 0);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        SampleBatch { dim, count: data.len() / dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Copies rows `start..end` into a new batch.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.count {
            return Err(Error::Shape(format!("row range {start}..{end} outside 0..{}", self.count)));
        }
        Ok(SampleBatch::from_trusted(self.dim, self.data[start * self.dim..end * self.dim].to_vec()))
    }

    /// Applies `f` to every entry; fails if any result is non-finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.dim, self.data.iter().map(|&v| f(v)).collect())
    }
}

/// The statistic `z = <sum_x, sum_y> / n^2` and the sums it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestStatistic {
    pub z: f64,
    pub sum_x: Vec<f64>,
    pub sum_y: Vec<f64>,
    pub n: usize,
}

impl TestStatistic {
    pub fn dim(&self) -> usize {
        self.sum_x.len()
    }
}

/// Incremental accumulator for the two half sums.
///
/// Rows are added in arrival order with plain double-precision addition, so
/// feeding a batch in chunks gives exactly the same sums as feeding it whole.
/// Memory is `O(d)` regardless of how many rows pass through.
#[derive(Debug, Clone)]
pub struct StatisticAccumulator {
    sum_x: Vec<f64>,
    sum_y: Vec<f64>,
    count_x: usize,
    count_y: usize,
}

impl StatisticAccumulator {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim must be >= 1"));
        }
        Ok(StatisticAccumulator { sum_x: vec![0.0; dim], sum_y: vec![0.0; dim], count_x: 0, count_y: 0 })
    }

    pub fn dim(&self) -> usize {
        self.sum_x.len()
    }

    pub fn push_x(&mut self, row: &[f64]) -> Result<()> {
        check_row(row, self.dim(), self.count_x)?;
        add_assign(&mut self.sum_x, row);
        self.count_x += 1;
        Ok(())
    }

    pub fn push_y(&mut self, row: &[f64]) -> Result<()> {
        check_row(row, self.dim(), self.count_y)?;
        add_assign(&mut self.sum_y, row);
        self.count_y += 1;
        Ok(())
    }

    pub fn extend_x(&mut self, batch: &SampleBatch) -> Result<()> {
        self.check_batch(batch)?;
        self.count_x += accumulate(&mut self.sum_x, batch.as_slice());
        Ok(())
    }

    pub fn extend_y(&mut self, batch: &SampleBatch) -> Result<()> {
        self.check_batch(batch)?;
        self.count_y += accumulate(&mut self.sum_y, batch.as_slice());
        Ok(())
    }

    fn check_batch(&self, batch: &SampleBatch) -> Result<()> {
        if batch.dim() != self.dim() {
            return Err(Error::Shape(format!("batch dim {} != accumulator dim {}", batch.dim(), self.dim())));
        }
        Ok(())
    }

    pub fn finish(self) -> Result<TestStatistic> {
        if self.count_x != self.count_y {
            return Err(Error::Shape(format!(
                "halves differ in size: {} X rows vs {} Y rows",
                self.count_x, self.count_y
            )));
        }
        if self.count_x == 0 {
            return Err(Error::InsufficientData("each half needs at least one row".into()));
        }
        let n = self.count_x;
        let nf = n as f64;
        let z = dot(&self.sum_x, &self.sum_y) / (nf * nf);
        Ok(TestStatistic { z, sum_x: self.sum_x, sum_y: self.sum_y, n })
    }
}

fn check_row(row: &[f64], dim: usize, index: usize) -> Result<()> {
    if row.len() != dim {
        return Err(Error::Shape(format!("row has {} values, expected {dim}", row.len())));
    }
    if let Some(col) = row.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: index, col });
    }
    Ok(())
}

#[inline]
fn add_assign(acc: &mut [f64], row: &[f64]) {
    for (a, &v) in acc.iter_mut().zip(row) {
        *a += v;
    }
}

/// Adds every row of `data` into `acc`, returning the row count.
fn accumulate(acc: &mut [f64], data: &[f64]) -> usize {
    let mut rows = 0;
    for row in data.chunks_exact(acc.len()) {
        add_assign(acc, row);
        rows += 1;
    }
    rows
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Computes the split statistic from two equally sized halves.
pub fn compute_statistic(half_x: &SampleBatch, half_y: &SampleBatch) -> Result<TestStatistic> {
    if half_x.dim() != half_y.dim() {
        return Err(Error::Shape(format!("half dims differ: {} vs {}", half_x.dim(), half_y.dim())));
    }
    if half_x.count() != half_y.count() {
        return Err(Error::Shape(format!("half sizes differ: {} vs {}", half_x.count(), half_y.count())));
    }
    let mut acc = StatisticAccumulator::new(half_x.dim())?;
    acc.extend_x(half_x)?;
    acc.extend_y(half_y)?;
    acc.finish()
}

/// Statistic over rows `0..n` (X half) and `n..2n` (Y half) of `samples`,
/// without copying.
pub(crate) fn split_statistic(samples: &SampleBatch, n: usize) -> Result<TestStatistic> {
    if n == 0 || samples.count() < 2 * n {
        return Err(Error::InsufficientData(format!(
            "need {} rows for two halves of {n}, have {}",
            2 * n,
            samples.count()
        )));
    }
    let d = samples.dim();
    let mut acc = StatisticAccumulator::new(d)?;
    acc.count_x = accumulate(&mut acc.sum_x, &samples.as_slice()[..n * d]);
    acc.count_y = accumulate(&mut acc.sum_y, &samples.as_slice()[n * d..2 * n * d]);
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Accept,
    Reject,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "ACCEPT",
            Verdict::Reject => "REJECT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub z: f64,
    pub threshold: f64,
    /// Samples per half actually used.
    pub n: usize,
    /// Set when fewer than the required `2n` rows were available; the
    /// completeness and soundness guarantees do not apply.
    pub under_sampled: bool,
}

/// Accepts iff `|z| <= threshold`; a tie accepts.
pub fn decide(stat: &TestStatistic, config: &TesterConfig) -> Result<Decision> {
    if stat.n != config.n() {
        return Err(Error::invalid(format!("statistic has n={} but config has n={}", stat.n, config.n())));
    }
    if stat.dim() != config.dim() {
        return Err(Error::invalid(format!(
            "statistic has dim={} but config has dim={}",
            stat.dim(),
            config.dim()
        )));
    }
    let verdict = if stat.z.abs() <= config.threshold() { Verdict::Accept } else { Verdict::Reject };
    Ok(Decision { verdict, z: stat.z, threshold: config.threshold(), n: stat.n, under_sampled: false })
}

/// Runs the tester end to end on a batch of samples.
///
/// Uses the first `n` rows as X and the next `n` as Y, where `n` comes from the
/// sample-size rule; any further rows are ignored. With fewer than `2n` rows
/// it runs with `floor(count/2)` per half and marks the decision
/// under-sampled.
pub fn run_tester(samples: &SampleBatch, epsilon: f64, c_star: f64) -> Result<Decision> {
    if samples.count() < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 rows, have {}", samples.count())));
    }
    let required = required_sample_size(epsilon, samples.dim(), c_star)?;
    let (n, under_sampled) = if samples.count() / 2 >= required {
        (required, false)
    } else {
        (samples.count() / 2, true)
    };
    let config = TesterConfig::with_sample_size(epsilon, samples.dim(), c_star, n)?;
    let stat = split_statistic(samples, n)?;
    let mut decision = decide(&stat, &config)?;
    decision.under_sampled = under_sampled;
    Ok(decision)
}
