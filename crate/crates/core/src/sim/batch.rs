//! Batch experiments: paired seeds across configurations, summaries and a
//! Welch's t-test on team completion time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{config_name, TrialResult};
use super::trace::Trace;
use super::{run_trial, TrialError};
use crate::scenario::Scenario;
use crate::stats::{mean, variance, welch_test};

/// Batches with fewer trials per configuration get a low-power flag.
pub const LOW_POWER_TRIALS: usize = 10;
/// A configuration with more than this fraction of aborted trials fails the batch.
pub const MAX_ABORT_FRACTION: f64 = 0.2;
pub const TEST_NAME: &str = "welch_t_test_two_sided";

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("a batch needs at least 2 trials, got {0}")]
    TooFewTrials(usize),
    #[error(transparent)]
    Trial(#[from] TrialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
}

impl MetricSummary {
    fn of(xs: &[f64]) -> Self {
        MetricSummary {
            mean: mean(xs),
            sd: if xs.len() > 1 { variance(xs).sqrt() } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub config: String,
    pub trials: usize,
    pub aborted: usize,
    pub t_h: MetricSummary,
    pub t_r: Vec<MetricSummary>,
    pub t_all: MetricSummary,
    pub t_r_last: MetricSummary,
    pub replans: MetricSummary,
}

impl ConfigSummary {
    pub fn of(config: &str, trials: &[TrialResult]) -> Self {
        let col = |f: &dyn Fn(&TrialResult) -> f64| MetricSummary::of(&trials.iter().map(f).collect::<Vec<_>>());
        let robots = trials.first().map_or(0, |t| t.t_r.len());
        ConfigSummary {
            config: config.to_string(),
            trials: trials.len(),
            aborted: trials.iter().filter(|t| t.aborted).count(),
            t_h: col(&|t| t.t_h),
            t_r: (0..robots).map(|i| col(&|t| t.t_r[i])).collect(),
            t_all: col(&|t| t.t_all),
            t_r_last: col(&|t| t.t_r_last),
            replans: col(&|t| f64::from(t.replans)),
        }
    }

    pub fn abort_fraction(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.aborted as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub scenario: String,
    pub base_seed: u64,
    pub trials_per_config: usize,
    /// Raw trials, one list per configuration, in seed order.
    pub trials: Vec<Vec<TrialResult>>,
    pub summary: Vec<ConfigSummary>,
    /// Test used for `p_value`.
    pub test: String,
    /// Comparison of the first two configurations on T_all, when both ran.
    pub p_value: Option<f64>,
    pub low_power: bool,
    pub failed: bool,
}

/// T_all p-value of two trial lists, `None` when the test is undefined.
pub fn compare(a: &[TrialResult], b: &[TrialResult]) -> Option<f64> {
    let xa: Vec<f64> = a.iter().map(|t| t.t_all).collect();
    let xb: Vec<f64> = b.iter().map(|t| t.t_all).collect();
    welch_test(&xa, &xb).ok()
}

/// Runs `n` trials of each configuration (feedback on/off) with seeds
/// `base_seed..base_seed + n`, the same seeds for every configuration.
pub fn run_batch_configs(
    scenario: &Scenario,
    n: usize,
    base_seed: u64,
    configs: &[bool],
) -> Result<BatchResult, BatchError> {
    batch(scenario, n, base_seed, configs, false).map(|(b, _)| b)
}

/// Like [`run_batch_configs`], also returning every trial's trace.
pub fn run_batch_traced(
    scenario: &Scenario,
    n: usize,
    base_seed: u64,
    configs: &[bool],
) -> Result<(BatchResult, Vec<Vec<Trace>>), BatchError> {
    batch(scenario, n, base_seed, configs, true)
}

fn batch(
    scenario: &Scenario,
    n: usize,
    base_seed: u64,
    configs: &[bool],
    keep_traces: bool,
) -> Result<(BatchResult, Vec<Vec<Trace>>), BatchError> {
    if n < 2 {
        return Err(BatchError::TooFewTrials(n));
    }
    let mut trials = Vec::with_capacity(configs.len());
    let mut traces = Vec::new();
    for &feedback in configs {
        let runs: Vec<(TrialResult, Option<Trace>)> = (0..n as u64)
            .into_par_iter()
            .map(|k| {
                run_trial(scenario, base_seed.wrapping_add(k), feedback)
                    .map(|(r, t)| (r, keep_traces.then_some(t)))
            })
            .collect::<Result<_, _>>()?;
        let (results, kept): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
        trials.push(results);
        if keep_traces {
            traces.push(kept.into_iter().flatten().collect());
        }
    }
    let summary: Vec<ConfigSummary> = configs
        .iter()
        .zip(&trials)
        .map(|(&f, t)| ConfigSummary::of(config_name(f), t))
        .collect();
    let p_value = match trials.as_slice() {
        [a, b, ..] => compare(a, b),
        _ => None,
    };
    let failed = summary.iter().any(|s| s.abort_fraction() > MAX_ABORT_FRACTION);
    let result = BatchResult {
        scenario: scenario.name.clone(),
        base_seed,
        trials_per_config: n,
        trials,
        summary,
        test: TEST_NAME.to_string(),
        p_value,
        low_power: n < LOW_POWER_TRIALS,
        failed,
    };
    Ok((result, traces))
}

/// The standard comparison: with feedback first, then without.
pub fn run_batch(scenario: &Scenario, n: usize, base_seed: u64) -> Result<BatchResult, BatchError> {
    run_batch_configs(scenario, n, base_seed, &[true, false])
}
