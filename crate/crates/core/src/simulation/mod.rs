//! Monte Carlo run-length studies.
//!
//! Every replication owns one [`RngStream`] derived from the study's master
//! seed and the replication index, and run lengths are aggregated with exact
//! integer sums. Results therefore do not depend on how many threads the
//! surrounding rayon pool has.

mod carl;
mod diagnostics;
mod runners;
mod ttest;

pub use carl::{carl_study, CarlRecord, CarlStudy};
pub use diagnostics::{
    kolmogorov_survival, ks_normal, ks_two_sample, lag1_autocorrelation, transform_check, KsResult, TransformCheck,
};
pub use runners::{
    draw_warmup, run_length_known, run_length_plug_in, run_length_plug_in_with_estimates,
    run_length_self_starting_conditional, run_length_self_starting_scenario1, RunOutcome,
};
pub use ttest::{
    conditional_level, t_critical_value, t_statistic, t_test_levels, ConditionalLevel, TTestConfig, TTestLevels,
};

use rayon::prelude::*;

use crate::distributions::RngStream;
use crate::{Error, Result};

/// Monte Carlo ARL estimate.
///
/// Censored runs enter the mean at the cap, so `censored > 0` makes `mean`
/// a lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArlEstimate {
    pub mean: f64,
    /// Sample standard deviation of the run lengths.
    pub sd: f64,
    pub stderr: f64,
    pub runs: u64,
    pub censored: u64,
    /// Degenerate warmup or Phase-I samples that had to be redrawn.
    pub resamples: u64,
}

impl ArlEstimate {
    pub fn from_outcomes(outcomes: &[RunOutcome]) -> Result<Self> {
        let runs = outcomes.len() as u64;
        if runs == 0 {
            return Err(Error::InvalidConfig("an ARL estimate needs at least one run".into()));
        }
        let mut sum: u128 = 0;
        let mut sum_sq: u128 = 0;
        let mut censored = 0;
        let mut resamples = 0;
        for o in outcomes {
            let n = o.length as u128;
            sum += n;
            sum_sq += n * n;
            censored += o.censored as u64;
            resamples += o.resamples;
        }
        let mean = sum as f64 / runs as f64;
        let (sd, stderr) = if runs >= 2 {
            // n Σx² - (Σx)² is exact in integers
            let r = runs as u128;
            let scatter = r * sum_sq - sum * sum;
            let var = scatter as f64 / (runs as f64 * (runs - 1) as f64);
            let sd = var.sqrt();
            (sd, sd / (runs as f64).sqrt())
        } else {
            (0.0, 0.0)
        };
        Ok(ArlEstimate { mean, sd, stderr, runs, censored, resamples })
    }

    /// At least one replication hit the cap.
    pub fn is_lower_bound(&self) -> bool {
        self.censored > 0
    }

    /// Every replication hit the cap; the mean is only the cap itself.
    pub fn all_censored(&self) -> bool {
        self.censored == self.runs
    }

    /// A standard error needs two or more runs.
    pub fn has_stderr(&self) -> bool {
        self.runs >= 2
    }
}

/// Runs `runs` replications of `runner`, replication `i` on stream
/// `(master_seed, i)`, in the current rayon pool.
pub fn estimate_arl<F>(runner: F, runs: u64, master_seed: u64) -> Result<ArlEstimate>
where
    F: Fn(&mut RngStream) -> Result<RunOutcome> + Sync,
{
    let outcomes = run_replications(&runner, runs, master_seed)?;
    ArlEstimate::from_outcomes(&outcomes)
}

/// Raw per-replication outcomes, in replication order.
pub fn run_replications<F>(runner: &F, runs: u64, master_seed: u64) -> Result<Vec<RunOutcome>>
where
    F: Fn(&mut RngStream) -> Result<RunOutcome> + Sync,
{
    if runs == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    (0..runs).into_par_iter().map(|i| runner(&mut RngStream::new(master_seed, i))).collect()
}

/// Sample variance with the `n - 1` denominator; zero below two values.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
