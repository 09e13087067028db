use crate::distributions::{normal_sample, ProcessModel, RngStream};
use crate::engines::{
    Chart, CusumConfig, KnownTransform, PlugInTransform, RunningStats, ScoreTransform, SelfStartTransform, WarmupSet,
};
use crate::{Error, Result};

/// One replication: the run length, whether it was truncated at the cap,
/// and how many degenerate warmup / Phase-I samples were redrawn first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub length: u64,
    pub censored: bool,
    pub resamples: u64,
}

/// Steps `chart` on fresh readings until it signals or the cap is hit.
fn monitor<T: ScoreTransform>(
    mut chart: Chart<T>,
    model: &ProcessModel,
    stream: &mut RngStream,
    resamples: u64,
) -> Result<RunOutcome> {
    let cap = chart.config().cap();
    for k in 1..=cap {
        if chart.observe(normal_sample(stream, model))? {
            return Ok(RunOutcome { length: k, censored: false, resamples });
        }
    }
    Ok(RunOutcome { length: cap, censored: true, resamples })
}

/// Draws `size` readings, redrawing whenever all of them coincide. Returns
/// the statistics and the number of redraws.
fn draw_nondegenerate(size: usize, model: &ProcessModel, stream: &mut RngStream) -> (RunningStats, u64) {
    let mut redraws = 0;
    loop {
        let mut stats = RunningStats::new();
        for _ in 0..size {
            stats.push(normal_sample(stream, model));
        }
        if stats.sum_sq_dev() > 0.0 {
            return (stats, redraws);
        }
        redraws += 1;
    }
}

/// Known-parameter chart: data from `model`, standardized with `presumed`.
pub fn run_length_known(
    config: &CusumConfig,
    model: &ProcessModel,
    presumed: &ProcessModel,
    stream: &mut RngStream,
) -> Result<RunOutcome> {
    monitor(Chart::new(KnownTransform::new(*presumed), *config), model, stream, 0)
}

/// A fresh warmup of size `m` from `model`, redrawn if degenerate.
pub fn draw_warmup(m: usize, model: &ProcessModel, stream: &mut RngStream) -> Result<(WarmupSet, u64)> {
    if m < 3 {
        return Err(Error::TooFewObservations { needed: 3, have: m as u64 });
    }
    let mut redraws = 0;
    loop {
        let values: Vec<f64> = (0..m).map(|_| normal_sample(stream, model)).collect();
        match WarmupSet::new(values) {
            Ok(w) => return Ok((w, redraws)),
            Err(Error::DegenerateWarmup) => redraws += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Scenario 1: a fresh warmup of `m` readings, then self-starting
/// monitoring from reading `m + 1`. Only monitored readings are counted.
pub fn run_length_self_starting_scenario1(
    config: &CusumConfig,
    m: usize,
    model: &ProcessModel,
    stream: &mut RngStream,
) -> Result<RunOutcome> {
    if m < 3 {
        return Err(Error::TooFewObservations { needed: 3, have: m as u64 });
    }
    let (stats, redraws) = draw_nondegenerate(m, model, stream);
    let transform = SelfStartTransform::from_stats(stats)?;
    monitor(Chart::new(transform, *config), model, stream, redraws)
}

/// Scenario 2: the given warmup is reused; Phase-II readings are fresh and
/// the estimates keep updating exactly as in Scenario 1.
pub fn run_length_self_starting_conditional(
    config: &CusumConfig,
    warmup: &WarmupSet,
    model: &ProcessModel,
    stream: &mut RngStream,
) -> Result<RunOutcome> {
    let transform = SelfStartTransform::from_warmup(warmup);
    monitor(Chart::new(transform, *config), model, stream, 0)
}

/// Plug-in chart: estimates from a Phase-I sample of `phase1_size`
/// readings, frozen, then monitoring with the known-parameter limit.
pub fn run_length_plug_in(
    config: &CusumConfig,
    phase1_size: usize,
    model: &ProcessModel,
    stream: &mut RngStream,
) -> Result<RunOutcome> {
    if phase1_size < 2 {
        return Err(Error::TooFewObservations { needed: 2, have: phase1_size as u64 });
    }
    let (stats, redraws) = draw_nondegenerate(phase1_size, model, stream);
    let transform = PlugInTransform::from_phase1(&stats)?;
    monitor(Chart::new(transform, *config), model, stream, redraws)
}

/// Plug-in chart with the estimates supplied directly.
pub fn run_length_plug_in_with_estimates(
    config: &CusumConfig,
    mu_hat: f64,
    sigma_hat: f64,
    model: &ProcessModel,
    stream: &mut RngStream,
) -> Result<RunOutcome> {
    let transform = PlugInTransform::new(mu_hat, sigma_hat)?;
    monitor(Chart::new(transform, *config), model, stream, 0)
}
