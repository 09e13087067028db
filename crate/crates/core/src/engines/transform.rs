use super::{ProcessModel, RunningStats, WarmupSet};
use crate::distributions::{phi_inv, t_lower_tail};
use crate::{Error, Result};

/// Probabilities are kept inside `[PROBABILITY_CLAMP, 1 - PROBABILITY_CLAMP]`
/// before Φ⁻¹, which bounds self-starting scores at about ±7.94.
pub const PROBABILITY_CLAMP: f64 = 1e-15;

/// Something that maps each incoming reading to a CUSUM score.
pub trait ScoreTransform {
    fn score(&mut self, x: f64) -> Result<f64>;
}

/// `(x - μ) / σ` with the true parameters.
#[inline]
pub fn known_transform(x: f64, model: &ProcessModel) -> f64 {
    (x - model.mu()) / model.sigma()
}

/// `(x - μ̂) / σ̂` with frozen estimates.
#[inline]
pub fn plug_in_transform(x: f64, mu_hat: f64, sigma_hat: f64) -> Result<f64> {
    if !(sigma_hat > 0.0) {
        return Err(Error::domain(format!("plug-in standard deviation must be positive, got {sigma_hat}")));
    }
    Ok((x - mu_hat) / sigma_hat)
}

/// Self-starting score of reading `x` given the statistics of all earlier
/// readings, together with the statistics updated by `x`.
///
/// With `n` the index of `x`, `W = (x - μ̂_{n-1}) / σ̂_{n-1}` is a scaled t
/// variate on `n - 2` degrees of freedom and
/// `U = Φ⁻¹(F_{n-2}(W √((n-1)/n)))` is exactly N(0, 1). The t tail is taken
/// on the side of `W` that keeps it small, so precision is not lost to
/// `1 - F` for large scores.
pub fn self_start_transform(x: f64, stats: RunningStats) -> Result<(f64, RunningStats)> {
    let prior = stats.count();
    if prior < 2 {
        return Err(Error::TooFewObservations { needed: 2, have: prior });
    }
    if !x.is_finite() {
        return Err(Error::domain(format!("reading {x} is not finite")));
    }
    let sd = stats.std_dev().unwrap_or(0.0);
    if !(sd > 0.0) {
        return Err(Error::DegenerateWarmup);
    }
    let w = (x - stats.mean()) / sd;
    // (n - 1) / n with n = prior + 1
    let scaled = w * (prior as f64 / (prior + 1) as f64).sqrt();
    let tail = t_lower_tail(scaled, (prior - 1) as f64).max(PROBABILITY_CLAMP);
    let z = phi_inv(tail);
    let u = if scaled > 0.0 { -z } else { z };
    Ok((u, stats.update(x)))
}

#[derive(Debug, Clone, Copy)]
pub struct KnownTransform {
    model: ProcessModel,
}

impl KnownTransform {
    pub fn new(model: ProcessModel) -> Self {
        KnownTransform { model }
    }
}

impl ScoreTransform for KnownTransform {
    #[inline]
    fn score(&mut self, x: f64) -> Result<f64> {
        Ok(known_transform(x, &self.model))
    }
}

/// Phase-I estimates frozen for the whole of monitoring.
#[derive(Debug, Clone, Copy)]
pub struct PlugInTransform {
    mu_hat: f64,
    sigma_hat: f64,
}

impl PlugInTransform {
    pub fn new(mu_hat: f64, sigma_hat: f64) -> Result<Self> {
        if !mu_hat.is_finite() || !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
            return Err(Error::domain(format!(
                "plug-in estimates must be finite with positive scale, got ({mu_hat}, {sigma_hat})"
            )));
        }
        Ok(PlugInTransform { mu_hat, sigma_hat })
    }

    /// Estimates from a Phase-I sample of at least two readings.
    pub fn from_phase1(stats: &RunningStats) -> Result<Self> {
        match stats.std_dev() {
            None => Err(Error::TooFewObservations { needed: 2, have: stats.count() }),
            Some(sd) if sd > 0.0 => Self::new(stats.mean(), sd),
            Some(_) => Err(Error::DegenerateWarmup),
        }
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    pub fn sigma_hat(&self) -> f64 {
        self.sigma_hat
    }
}

impl ScoreTransform for PlugInTransform {
    #[inline]
    fn score(&mut self, x: f64) -> Result<f64> {
        Ok((x - self.mu_hat) / self.sigma_hat)
    }
}

/// Running estimates that absorb every reading after scoring it.
#[derive(Debug, Clone, Copy)]
pub struct SelfStartTransform {
    stats: RunningStats,
}

impl SelfStartTransform {
    pub fn from_warmup(warmup: &WarmupSet) -> Self {
        SelfStartTransform { stats: warmup.stats() }
    }

    /// Starts from arbitrary statistics; they must already hold two readings
    /// with positive spread.
    pub fn from_stats(stats: RunningStats) -> Result<Self> {
        if stats.count() < 2 {
            return Err(Error::TooFewObservations { needed: 2, have: stats.count() });
        }
        if !(stats.sum_sq_dev() > 0.0) {
            return Err(Error::DegenerateWarmup);
        }
        Ok(SelfStartTransform { stats })
    }

    pub fn stats(&self) -> RunningStats {
        self.stats
    }
}

impl ScoreTransform for SelfStartTransform {
    #[inline]
    fn score(&mut self, x: f64) -> Result<f64> {
        let (u, stats) = self_start_transform(x, self.stats)?;
        self.stats = stats;
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_examples() {
        let m = ProcessModel::new(1.0, 2.0).unwrap();
        assert_eq!(known_transform(1.0, &m), 0.0);
        assert_eq!(known_transform(3.0, &m), 1.0);
        let m = ProcessModel::new(-4.0, 0.5).unwrap();
        assert_eq!(known_transform(-3.5, &m), 1.0);
    }

    #[test]
    fn plug_in_examples() {
        assert_eq!(plug_in_transform(1.0, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(plug_in_transform(3.0, 1.0, 2.0).unwrap(), 1.0);
        assert_eq!(plug_in_transform(-3.5, -4.0, 0.5).unwrap(), 1.0);
        assert!(plug_in_transform(1.0, 0.0, 0.0).is_err());
        assert!(plug_in_transform(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn plug_in_is_frozen() {
        let mut t = PlugInTransform::new(2.0, 4.0).unwrap();
        for _ in 0..5 {
            t.score(100.0).unwrap();
        }
        assert_eq!(t.score(6.0).unwrap(), 1.0);
    }

    #[test]
    fn self_start_centre_maps_to_zero() {
        let stats = RunningStats::from_slice(&[0.0, 1.0]);
        let (u, next) = self_start_transform(0.5, stats).unwrap();
        assert_eq!(u, 0.0);
        assert_eq!(next.count(), 3);
    }

    #[test]
    fn self_start_cauchy_case() {
        // W = 1.5/√0.5, scaled by √(2/3) gives √3; F_1(√3) = 5/6
        let stats = RunningStats::from_slice(&[0.0, 1.0]);
        let (u, _) = self_start_transform(2.0, stats).unwrap();
        assert!((u - 0.967_421_566_101_701).abs() < 1e-12, "{u}");
        let (u_neg, _) = self_start_transform(-1.0, stats).unwrap();
        assert!((u_neg + 0.967_421_566_101_701).abs() < 1e-12, "{u_neg}");
    }

    #[test]
    fn self_start_location_scale() {
        let stats = RunningStats::from_slice(&[5.0, 7.0]);
        let (u, _) = self_start_transform(6.0, stats).unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn self_start_errors() {
        let one = RunningStats::from_slice(&[1.0]);
        assert!(matches!(self_start_transform(0.0, one), Err(Error::TooFewObservations { .. })));
        let flat = RunningStats::from_slice(&[2.0, 2.0, 2.0]);
        assert_eq!(self_start_transform(0.0, flat), Err(Error::DegenerateWarmup));
        assert!(SelfStartTransform::from_stats(flat).is_err());
    }

    #[test]
    fn extreme_reading_is_clamped_not_infinite() {
        let stats = RunningStats::from_slice(&[0.0, 1.0, 0.5]);
        let (u, _) = self_start_transform(1e300, stats).unwrap();
        assert!(u.is_finite() && u > 7.0);
        let (u, _) = self_start_transform(-1e300, stats).unwrap();
        assert!(u.is_finite() && u < -7.0);
    }

    proptest! {
        #[test]
        fn affine_invariance(xs in prop::collection::vec(-50.0f64..50.0, 5..60),
                             a in 0.01f64..100.0, b in -1e3f64..1e3) {
            let mut plain = SelfStartTransform::from_stats(RunningStats::from_slice(&xs[..3])).unwrap();
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let mut moved = SelfStartTransform::from_stats(RunningStats::from_slice(&ys[..3])).unwrap();
            for (x, y) in xs[3..].iter().zip(&ys[3..]) {
                let u = plain.score(*x).unwrap();
                let v = moved.score(*y).unwrap();
                prop_assert!((u - v).abs() < 1e-10, "{u} vs {v}");
            }
        }
    }
}
