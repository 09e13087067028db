use crate::{Error, Result};

/// One-pass running mean and sum of squared deviations (Welford).
///
/// `variance()` uses the `n - 1` denominator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        xs.iter().fold(Self::new(), |s, &x| s.update(x))
    }

    /// Returns the statistics with `x` appended.
    #[inline]
    #[must_use]
    pub fn update(self, x: f64) -> Self {
        let n = self.n + 1;
        let delta = x - self.mean;
        let mean = self.mean + delta / n as f64;
        let m2 = self.m2 + delta * (x - mean);
        RunningStats { n, mean, m2: m2.max(0.0) }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        *self = self.update(x);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sum_sq_dev(&self) -> f64 {
        self.m2
    }

    /// Sample variance, undefined for fewer than two observations.
    #[inline]
    pub fn variance(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.m2 / (self.n - 1) as f64)
    }

    #[inline]
    pub fn std_dev(&self) -> Option<f64> {
        self.variance().map(f64::sqrt)
    }
}

/// The first `m >= 3` readings of a self-starting chart.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmupSet {
    values: Vec<f64>,
    stats: RunningStats,
}

pub const MIN_WARMUP: usize = 3;

impl WarmupSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_WARMUP {
            return Err(Error::TooFewObservations { needed: MIN_WARMUP as u64, have: values.len() as u64 });
        }
        if let Some(bad) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::domain(format!("warmup value {bad} is not finite")));
        }
        let stats = RunningStats::from_slice(&values);
        if stats.sum_sq_dev() <= 0.0 {
            return Err(Error::DegenerateWarmup);
        }
        Ok(WarmupSet { values, stats })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn stats(&self) -> RunningStats {
        self.stats
    }

    /// μ̂_m.
    pub fn mean(&self) -> f64 {
        self.stats.mean()
    }

    /// σ̂_m, strictly positive.
    pub fn std_dev(&self) -> f64 {
        self.stats.std_dev().expect("warmup has at least three values")
    }
}
