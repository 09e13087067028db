//! The two-sample t-test seen unconditionally and conditionally on a
//! frozen Y sample: the same structure as Scenario 1 versus Scenario 2.

use rayon::prelude::*;

use super::sample_variance;
use crate::distributions::{derive_seed, t_lower_tail, RngStream};
use crate::engines::RunningStats;
use crate::{Error, Result};

const FRESH_LABEL: u64 = 0x4652_5348; // "FRSH"
const FROZEN_Y_LABEL: u64 = 0x46_5a59; // "FZY"
const COND_X_LABEL: u64 = 0x43_4e58; // "CNX"

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestConfig {
    m_x: usize,
    n_y: usize,
    alpha: f64,
}

impl TTestConfig {
    pub fn new(m_x: usize, n_y: usize, alpha: f64) -> Result<Self> {
        if m_x < 2 || n_y < 2 {
            return Err(Error::InvalidConfig(format!("sample sizes must be >= 2, got ({m_x}, {n_y})")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(TTestConfig { m_x, n_y, alpha })
    }

    pub fn m_x(&self) -> usize {
        self.m_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn degrees_of_freedom(&self) -> usize {
        self.m_x + self.n_y - 2
    }
}

/// `|X̄ - Ȳ| / (S √(1/m + 1/n))` with `S²` the pooled variance.
pub fn t_statistic(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::TooFewObservations { needed: 2, have: xs.len().min(ys.len()) as u64 });
    }
    t_from_stats(&RunningStats::from_slice(xs), &RunningStats::from_slice(ys))
}

fn t_from_stats(x: &RunningStats, y: &RunningStats) -> Result<f64> {
    let (m, n) = (x.count() as f64, y.count() as f64);
    let pooled = (x.sum_sq_dev() + y.sum_sq_dev()) / (m + n - 2.0);
    if !(pooled > 0.0) {
        return Err(Error::domain("pooled variance is zero"));
    }
    Ok((x.mean() - y.mean()).abs() / (pooled * (1.0 / m + 1.0 / n)).sqrt())
}

/// Upper `α/2` point of t on `df` degrees of freedom, by bisection on the
/// lower tail.
pub fn t_critical_value(alpha: f64, df: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || df < 1 {
        return Err(Error::domain(format!("bad critical-value request (alpha {alpha}, df {df})")));
    }
    let target = alpha / 2.0;
    let nu = df as f64;
    let (mut lo, mut hi) = (0.0, 1.0);
    while t_lower_tail(hi, nu) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_lower_tail(mid, nu) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalLevel {
    pub y_id: u64,
    pub y_mean: f64,
    pub level: f64,
    pub reps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TTestLevels {
    pub critical_value: f64,
    /// Rejection rate over fresh (X, Y) pairs under the null.
    pub unconditional_level: f64,
    pub unconditional_trials: u64,
    pub conditional: Vec<ConditionalLevel>,
    /// Mean of the conditional levels and its between-Y standard error.
    pub mean_conditional: f64,
    pub mean_conditional_stderr: f64,
    /// Sample variance of the conditional levels.
    pub between_variance: f64,
    /// Mean binomial variance `p(1-p)/reps` of a single conditional level.
    pub binomial_noise: f64,
}

impl TTestLevels {
    pub fn unconditional_stderr(&self, alpha: f64) -> f64 {
        (alpha * (1.0 - alpha) / self.unconditional_trials as f64).sqrt()
    }
}

fn draw(size: usize, stream: &mut RngStream) -> RunningStats {
    let mut s = RunningStats::new();
    for _ in 0..size {
        s.push(stream.std_normal());
    }
    s
}

/// Null-hypothesis rejection rates. The unconditional level uses
/// `n_fixed_y * reps_per_y` fresh pairs; each of the `n_fixed_y` frozen Y
/// samples is tested against `reps_per_y` fresh X samples.
pub fn t_test_levels(cfg: &TTestConfig, n_fixed_y: u64, reps_per_y: u64, master_seed: u64) -> Result<TTestLevels> {
    if n_fixed_y < 2 || reps_per_y < 1 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 frozen Y samples and 1 rep each, got {n_fixed_y} x {reps_per_y}"
        )));
    }
    let critical_value = t_critical_value(cfg.alpha, cfg.degrees_of_freedom())?;
    let reject = |x: &RunningStats, y: &RunningStats| -> Result<bool> { Ok(t_from_stats(x, y)? > critical_value) };

    let trials = n_fixed_y * reps_per_y;
    let fresh_seed = derive_seed(master_seed, FRESH_LABEL);
    let rejections: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut s = RngStream::new(fresh_seed, i);
            let x = draw(cfg.m_x, &mut s);
            let y = draw(cfg.n_y, &mut s);
            reject(&x, &y).map(u64::from)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();

    let y_seed = derive_seed(master_seed, FROZEN_Y_LABEL);
    let x_seed = derive_seed(master_seed, COND_X_LABEL);
    let conditional: Vec<ConditionalLevel> = (0..n_fixed_y)
        .into_par_iter()
        .map(|k| {
            let y = draw(cfg.n_y, &mut RngStream::new(y_seed, k));
            let x_stream_seed = derive_seed(x_seed, k);
            let mut hits = 0u64;
            for r in 0..reps_per_y {
                let x = draw(cfg.m_x, &mut RngStream::new(x_stream_seed, r));
                hits += reject(&x, &y)? as u64;
            }
            Ok(ConditionalLevel { y_id: k, y_mean: y.mean(), level: hits as f64 / reps_per_y as f64, reps: reps_per_y })
        })
        .collect::<Result<_>>()?;

    let levels: Vec<f64> = conditional.iter().map(|c| c.level).collect();
    let mean_conditional = levels.iter().sum::<f64>() / levels.len() as f64;
    let between_variance = sample_variance(&levels);
    let binomial_noise = levels.iter().map(|p| p * (1.0 - p) / reps_per_y as f64).sum::<f64>() / levels.len() as f64;

    Ok(TTestLevels {
        critical_value,
        unconditional_level: rejections as f64 / trials as f64,
        unconditional_trials: trials,
        mean_conditional,
        mean_conditional_stderr: (between_variance / levels.len() as f64).sqrt(),
        conditional,
        between_variance,
        binomial_noise,
    })
}

/// Rejection rate against one given Y sample over `reps` fresh X samples.
pub fn conditional_level(cfg: &TTestConfig, ys: &[f64], reps: u64, master_seed: u64) -> Result<f64> {
    if ys.len() != cfg.n_y {
        return Err(Error::InvalidConfig(format!("Y sample has {} values, config says {}", ys.len(), cfg.n_y)));
    }
    if reps < 1 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    let critical_value = t_critical_value(cfg.alpha, cfg.degrees_of_freedom())?;
    let y = RunningStats::from_slice(ys);
    let hits = (0..reps)
        .into_par_iter()
        .map(|r| {
            let x = draw(cfg.m_x, &mut RngStream::new(master_seed, r));
            Ok(u64::from(t_from_stats(&x, &y)? > critical_value))
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum::<u64>();
    Ok(hits as f64 / reps as f64)
}
