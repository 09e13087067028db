//! CUSUM recursion and the three ways of turning readings into scores.
//!
//! ```text
//! D_0 = 0,   D_k = max(0, D_{k-1} + U_k - δ),   signal when D_k > h
//! ```
//!
//! The scores `U` come from one of the [`ScoreTransform`] implementations:
//! [`KnownTransform`] (true μ, σ), [`PlugInTransform`] (frozen Phase-I
//! estimates) or [`SelfStartTransform`] (running estimates pushed through
//! the t-CDF and the inverse normal CDF).

mod running;
mod transform;

pub use crate::distributions::ProcessModel;
pub use running::{RunningStats, WarmupSet, MIN_WARMUP};
pub use transform::{
    known_transform, plug_in_transform, self_start_transform, KnownTransform, PlugInTransform, ScoreTransform,
    SelfStartTransform, PROBABILITY_CLAMP,
};

use crate::{Error, Result};

/// One chart: reference value δ, control limit h, run-length cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumConfig {
    delta: f64,
    limit: f64,
    cap: u64,
}

/// Default truncation bound on monitored steps.
pub const DEFAULT_CAP: u64 = 10_000_000;

impl CusumConfig {
    /// `limit = 0` is accepted so that the geometric degenerate charts can be
    /// expressed; every other use has `limit > 0`.
    pub fn new(delta: f64, limit: f64, cap: u64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("reference value must be >= 0, got {delta}")));
        }
        if !(limit >= 0.0 && limit.is_finite()) {
            return Err(Error::InvalidConfig(format!("control limit must be >= 0, got {limit}")));
        }
        if cap < 1 {
            return Err(Error::InvalidConfig("run-length cap must be at least 1".into()));
        }
        Ok(CusumConfig { delta, limit, cap })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }
}

/// Current CUSUM value and number of scores consumed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CusumState {
    d: f64,
    steps: u64,
}

impl CusumState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from an arbitrary non-negative value (mainly for tests).
    pub fn with_value(d: f64) -> Result<Self> {
        if d >= 0.0 && d.is_finite() {
            Ok(CusumState { d, steps: 0 })
        } else {
            Err(Error::domain(format!("CUSUM value must be finite and >= 0, got {d}")))
        }
    }

    pub fn value(&self) -> f64 {
        self.d
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// One step of the upper CUSUM. The signal rule is strict: `d > h`.
#[inline]
pub fn cusum_step(state: CusumState, u: f64, config: &CusumConfig) -> Result<(CusumState, bool)> {
    if !u.is_finite() {
        return Err(Error::NonFiniteScore(u));
    }
    let d = (state.d + u - config.delta).max(0.0);
    let next = CusumState { d, steps: state.steps + 1 };
    Ok((next, d > config.limit))
}

/// A chart as an incremental state machine: score transform plus recursion.
#[derive(Debug, Clone)]
pub struct Chart<T> {
    transform: T,
    state: CusumState,
    config: CusumConfig,
}

impl<T: ScoreTransform> Chart<T> {
    pub fn new(transform: T, config: CusumConfig) -> Self {
        Chart { transform, state: CusumState::new(), config }
    }

    /// Feeds one reading; returns `true` when the chart signals.
    #[inline]
    pub fn observe(&mut self, x: f64) -> Result<bool> {
        let u = self.transform.score(x)?;
        let (state, signal) = cusum_step(self.state, u, &self.config)?;
        self.state = state;
        Ok(signal)
    }

    pub fn state(&self) -> CusumState {
        self.state
    }

    pub fn transform(&self) -> &T {
        &self.transform
    }

    pub fn config(&self) -> &CusumConfig {
        &self.config
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(delta: f64, limit: f64) -> CusumConfig {
        CusumConfig::new(delta, limit, DEFAULT_CAP).unwrap()
    }

    #[test]
    fn step_examples() {
        let (s, sig) = cusum_step(CusumState::new(), 1.0, &cfg(0.5, 4.0)).unwrap();
        assert_eq!(s.value(), 0.5);
        assert_eq!(s.steps(), 1);
        assert!(!sig);

        let (s, _) = cusum_step(CusumState::with_value(0.2).unwrap(), -3.0, &cfg(0.5, 4.0)).unwrap();
        assert_eq!(s.value(), 0.0);

        let (s, sig) = cusum_step(CusumState::with_value(4.0).unwrap(), 1.0, &cfg(0.5, 4.389)).unwrap();
        assert_eq!(s.value(), 4.5);
        assert!(sig);
    }

    #[test]
    fn tie_does_not_signal() {
        let (s, sig) = cusum_step(CusumState::with_value(3.5).unwrap(), 1.0, &cfg(0.5, 4.0)).unwrap();
        assert_eq!(s.value(), 4.0);
        assert!(!sig);
    }

    #[test]
    fn non_finite_score_is_rejected() {
        assert_eq!(
            cusum_step(CusumState::new(), f64::NAN, &cfg(0.5, 4.0)).unwrap_err().to_string(),
            Error::NonFiniteScore(f64::NAN).to_string()
        );
        assert!(cusum_step(CusumState::new(), f64::INFINITY, &cfg(0.5, 4.0)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(CusumConfig::new(-0.1, 4.0, 10).is_err());
        assert!(CusumConfig::new(0.5, -1.0, 10).is_err());
        assert!(CusumConfig::new(0.5, 4.0, 0).is_err());
        assert!(CusumConfig::new(0.5, f64::NAN, 10).is_err());
        assert!(CusumConfig::new(0.0, 0.0, 1).is_ok());
    }

    #[test]
    fn chart_with_known_transform() {
        let model = ProcessModel::new(10.0, 2.0).unwrap();
        let mut chart = Chart::new(KnownTransform::new(model), cfg(0.5, 0.9));
        assert!(!chart.observe(12.0).unwrap()); // u = 1, d = 0.5
        assert!(chart.observe(12.0).unwrap()); // d = 1.0
        assert_eq!(chart.state().steps(), 2);
    }

    proptest! {
        #[test]
        fn value_never_negative(scores in prop::collection::vec(-10.0f64..10.0, 1..200),
                                delta in 0.0f64..2.0) {
            let config = cfg(delta, 1e9);
            let mut s = CusumState::new();
            for u in scores {
                s = cusum_step(s, u, &config).unwrap().0;
                prop_assert!(s.value() >= 0.0);
            }
        }
    }
}
