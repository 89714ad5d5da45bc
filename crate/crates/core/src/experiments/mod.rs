//! Monte Carlo harness.
//!
//! A plan is a grid of tester configurations crossed with a null spec and a
//! list of alternative specs. Each (config, spec) cell runs `trials`
//! independent trials: draw `2n` rows, compute `Z`, decide. Trial `t` of cell
//! `c` always uses the stream `base_seed.substream(c).trial(t)`, and per-trial
//! outcomes are reduced in trial order, so results do not depend on how the
//! trials were scheduled.

mod audit;
mod calibrate;
mod complexity;
mod wilson;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::seed::Seed;
use crate::tester::{decide, split_statistic, TesterConfig, Verdict, DEFAULT_C_STAR};

pub use audit::{moment_audit, moment_audit_with, predicted_moments, MomentAudit};
pub use calibrate::{calibrate_cstar, calibrate_cstar_with, small_ball_ratio, ALPHA_GRID_EXPONENTS};
pub use complexity::{
    empirical_sample_complexity, log_log_slope, ComplexitySearch, ComplexityOutcome, RatesAtN,
};
pub use wilson::{wilson_interval, Z_95};

/// One tester configuration in a plan's grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub epsilon: f64,
    pub dim: usize,
    #[serde(default = "default_c_star")]
    pub c_star: f64,
    /// Samples per half; overrides the sample-size rule when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_override: Option<usize>,
}

fn default_c_star() -> f64 {
    DEFAULT_C_STAR
}

impl GridEntry {
    pub fn new(epsilon: f64, dim: usize, c_star: f64) -> Self {
        GridEntry { epsilon, dim, c_star, n_override: None }
    }

    pub fn config(&self) -> Result<TesterConfig> {
        match self.n_override {
            Some(n) => TesterConfig::with_sample_size(self.epsilon, self.dim, self.c_star, n),
            None => TesterConfig::new(self.epsilon, self.dim, self.c_star),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub tester_config_grid: Vec<GridEntry>,
    pub null_spec: DistributionSpec,
    #[serde(default)]
    pub alt_specs: Vec<DistributionSpec>,
    pub trials: usize,
    pub base_seed: Seed,
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentPlan {
    /// Checks every field, reporting the first problem with its path.
    pub fn validate(&self) -> Result<()> {
        let field = |path: String, e: Error| Error::invalid(format!("{path}: {e}"));
        if self.trials == 0 {
            return Err(Error::invalid("trials: must be >= 1"));
        }
        if self.tester_config_grid.is_empty() {
            return Err(Error::invalid("tester_config_grid: must not be empty"));
        }
        self.null_spec.validate().map_err(|e| field("null_spec".into(), e))?;
        let dim = self.null_spec.dim;
        for (i, g) in self.tester_config_grid.iter().enumerate() {
            g.config().map_err(|e| field(format!("tester_config_grid[{i}]"), e))?;
            if g.dim != dim {
                return Err(Error::invalid(format!(
                    "tester_config_grid[{i}].dim: {} does not match null_spec.dim {dim}",
                    g.dim
                )));
            }
        }
        for (i, s) in self.alt_specs.iter().enumerate() {
            s.validate().map_err(|e| field(format!("alt_specs[{i}]"), e))?;
            if s.dim != dim {
                return Err(Error::invalid(format!(
                    "alt_specs[{i}].dim: {} does not match null_spec.dim {dim}",
                    s.dim
                )));
            }
        }
        Ok(())
    }

    /// Cells in execution order: for each grid entry, the null spec followed by
    /// every alternative.
    fn cells(&self) -> Result<Vec<(TesterConfig, Hypothesis, &DistributionSpec)>> {
        let mut cells = Vec::new();
        for g in &self.tester_config_grid {
            let config = g.config()?;
            cells.push((config.clone(), Hypothesis::Null, &self.null_spec));
            for alt in &self.alt_specs {
                cells.push((config.clone(), Hypothesis::Alternative, alt));
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Null,
    Alternative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config: CellConfig,
    pub hypothesis: Hypothesis,
    pub spec: DistributionSpec,
    pub trials: usize,
    pub completed_trials: usize,
    pub accepts: usize,
    pub accept_rate: f64,
    pub wilson_ci: (f64, f64),
    pub mean_z: f64,
    pub var_z: f64,
    /// Zero unless the plan records timing.
    pub mean_runtime_ns_per_sample_coord: f64,
    /// First trial failure, if any; the cell is then partial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CellResult {
    pub fn reject_rate(&self) -> f64 {
        1.0 - self.accept_rate
    }

    /// Wilson interval for the rejection rate.
    pub fn reject_ci(&self) -> (f64, f64) {
        (1.0 - self.wilson_ci.1, 1.0 - self.wilson_ci.0)
    }
}

/// Serializable mirror of [`TesterConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub epsilon: f64,
    pub dim: usize,
    pub c_star: f64,
    pub n: usize,
    pub threshold: f64,
}

impl From<&TesterConfig> for CellConfig {
    fn from(c: &TesterConfig) -> Self {
        CellConfig { epsilon: c.epsilon(), dim: c.dim(), c_star: c.c_star(), n: c.n(), threshold: c.threshold() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub plan_name: String,
    pub per_cell: Vec<CellResult>,
    /// Smallest completed-trial count over all cells; equals the plan's
    /// trial count on success.
    pub completed_trials: usize,
    pub partial: bool,
}

#[derive(Debug, Clone, Copy)]
struct TrialOutcome {
    z: f64,
    accepted: bool,
    nanos: u128,
}

fn run_trial(config: &TesterConfig, spec: &DistributionSpec, seed: Seed, timed: bool) -> Result<TrialOutcome> {
    let n = config.n();
    let samples = spec.sample(2 * n, seed)?;
    let start = timed.then(Instant::now);
    let stat = split_statistic(&samples, n)?;
    let nanos = start.map_or(0, |s| s.elapsed().as_nanos());
    let decision = decide(&stat, config)?;
    Ok(TrialOutcome { z: stat.z, accepted: decision.verdict == Verdict::Accept, nanos })
}

/// Mean and unbiased variance, accumulated in slice order.
pub(crate) fn mean_var(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

fn run_cell(
    config: &TesterConfig,
    hypothesis: Hypothesis,
    spec: &DistributionSpec,
    trials: usize,
    seed: Seed,
    timed: bool,
    exec: Execution,
) -> CellResult {
    let outcomes = exec.map_indexed(trials, |t| run_trial(config, spec, seed.trial(t as u64), timed));
    let first_error = outcomes.iter().find_map(|o| o.as_ref().err()).map(|e| e.to_string());
    let ok: Vec<TrialOutcome> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    let accepts = ok.iter().filter(|o| o.accepted).count();
    let zs: Vec<f64> = ok.iter().map(|o| o.z).collect();
    let (mean_z, var_z) = mean_var(&zs);
    let completed = ok.len();
    let accept_rate = if completed == 0 { 0.0 } else { accepts as f64 / completed as f64 };
    let coords = (completed as f64) * 2.0 * config.n() as f64 * config.dim() as f64;
    let runtime = if timed && completed > 0 {
        ok.iter().map(|o| o.nanos as f64).sum::<f64>() / coords
    } else {
        0.0
    };
    if let Some(e) = &first_error {
        log::warn!("cell aborted after {completed}/{trials} trials: {e}");
    }
    CellResult {
        config: config.into(),
        hypothesis,
        spec: spec.clone(),
        trials,
        completed_trials: completed,
        accepts,
        accept_rate,
        wilson_ci: wilson_interval(accepts, completed, Z_95),
        mean_z,
        var_z,
        mean_runtime_ns_per_sample_coord: runtime,
        error: first_error,
    }
}

/// Runs every cell of the plan with the default execution mode.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    run_experiment_with(plan, Execution::default())
}

pub fn run_experiment_with(plan: &ExperimentPlan, exec: Execution) -> Result<ExperimentResult> {
    plan.validate()?;
    let per_cell: Vec<CellResult> = plan
        .cells()?
        .into_iter()
        .enumerate()
        .map(|(i, (config, hyp, spec))| {
            let seed = plan.base_seed.substream(i as u64);
            run_cell(&config, hyp, spec, plan.trials, seed, plan.record_timing, exec)
        })
        .collect();
    let completed_trials = per_cell.iter().map(|c| c.completed_trials).min().unwrap_or(0);
    let partial = per_cell.iter().any(|c| c.error.is_some());
    Ok(ExperimentResult { plan_name: plan.name.clone(), per_cell, completed_trials, partial })
}
