use rayon::prelude::*;

use super::runners::{draw_warmup, run_length_self_starting_conditional, RunOutcome};
use super::{sample_variance, ArlEstimate};
use crate::distributions::{derive_seed, ProcessModel, RngStream};
use crate::engines::{CusumConfig, WarmupSet};
use crate::{Error, Result};

const WARMUP_LABEL: u64 = 0x5741_524d; // "WARM"
const PHASE2_LABEL: u64 = 0x5048_5332; // "PHS2"

/// Conditional ARL estimate for one warmup set.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlRecord {
    pub warmup_id: u64,
    pub warmup_mean: f64,
    pub warmup_sd: f64,
    pub carl: ArlEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarlStudy {
    pub records: Vec<CarlRecord>,
    /// Grand mean of every conditional run length. Its `stderr` is taken
    /// between warmups (`sqrt(between_variance / n_warmups)`), because runs
    /// sharing a warmup are not independent of one another.
    pub tower: ArlEstimate,
    /// Sample variance of the per-warmup CARL estimates.
    pub between_variance: f64,
    /// Mean of the per-warmup squared standard errors: the share of
    /// `between_variance` explained by Monte Carlo noise alone.
    pub noise_floor: f64,
    /// Degenerate warmups that were redrawn.
    pub resamples: u64,
}

/// Draws `n_warmups` fresh warmups of size `m` and estimates the
/// conditional ARL of each from `runs_per_warmup` Scenario-2 runs.
pub fn carl_study(
    config: &CusumConfig,
    m: usize,
    n_warmups: u64,
    runs_per_warmup: u64,
    model: &ProcessModel,
    master_seed: u64,
) -> Result<CarlStudy> {
    if n_warmups < 2 || runs_per_warmup < 2 {
        return Err(Error::InvalidConfig(format!(
            "CARL study needs at least 2 warmups and 2 runs per warmup, got {n_warmups} x {runs_per_warmup}"
        )));
    }
    let warmup_seed = derive_seed(master_seed, WARMUP_LABEL);
    let phase2_seed = derive_seed(master_seed, PHASE2_LABEL);

    let warmups: Vec<(WarmupSet, u64)> = (0..n_warmups)
        .into_par_iter()
        .map(|i| draw_warmup(m, model, &mut RngStream::new(warmup_seed, i)))
        .collect::<Result<_>>()?;
    let resamples = warmups.iter().map(|(_, r)| r).sum();

    let total = n_warmups * runs_per_warmup;
    let outcomes: Vec<RunOutcome> = (0..total)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / runs_per_warmup, k % runs_per_warmup);
            let mut stream = RngStream::new(derive_seed(phase2_seed, i), j);
            run_length_self_starting_conditional(config, &warmups[i as usize].0, model, &mut stream)
        })
        .collect::<Result<_>>()?;

    let records: Vec<CarlRecord> = outcomes
        .chunks(runs_per_warmup as usize)
        .zip(&warmups)
        .enumerate()
        .map(|(i, (chunk, (warmup, _)))| {
            Ok(CarlRecord {
                warmup_id: i as u64,
                warmup_mean: warmup.mean(),
                warmup_sd: warmup.std_dev(),
                carl: ArlEstimate::from_outcomes(chunk)?,
            })
        })
        .collect::<Result<_>>()?;

    let carls: Vec<f64> = records.iter().map(|r| r.carl.mean).collect();
    let between_variance = sample_variance(&carls);
    let noise_floor = records.iter().map(|r| r.carl.stderr * r.carl.stderr).sum::<f64>() / records.len() as f64;

    let mut tower = ArlEstimate::from_outcomes(&outcomes)?;
    tower.stderr = (between_variance / n_warmups as f64).sqrt();
    tower.resamples = resamples;

    Ok(CarlStudy { records, tower, between_variance, noise_floor, resamples })
}
