//! Goodness-of-fit checks used to validate the self-starting transform.

use rayon::prelude::*;

use crate::distributions::{normal_sample, phi, ProcessModel, RngStream};
use crate::engines::{RunningStats, ScoreTransform, SelfStartTransform};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the p-value.
    pub n_eff: f64,
}

/// Survival function of the Kolmogorov distribution, P(K > λ).
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // P(K <= λ) = √(2π)/λ Σ exp(-(2k-1)² π² / (8λ²)), fast for small λ
        let pi2 = std::f64::consts::PI.powi(2);
        let s: f64 = (1..=20)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-j * j * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value with Stephens' small-sample correction.
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let root = n_eff.sqrt();
    kolmogorov_survival((root + 0.12 + 0.11 / root) * d)
}

/// One-sample Kolmogorov–Smirnov test against N(0, 1).
pub fn ks_normal(values: &[f64]) -> Result<KsResult> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("KS test needs at least one value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = phi(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n), n_eff: n })
}

/// Two-sample Kolmogorov–Smirnov test; ties (common for run lengths) are
/// stepped over together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidConfig("KS test needs two non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n_eff), n_eff })
}

/// Pearson correlation of consecutive pairs, pooled over sequences; pairs
/// never straddle two sequences. Returns `(rho, pairs)`.
pub fn lag1_autocorrelation(sequences: &[Vec<f64>]) -> (f64, usize) {
    let pairs: Vec<(f64, f64)> = sequences.iter().flat_map(|s| s.windows(2).map(|w| (w[0], w[1]))).collect();
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return (0.0, pairs.len());
    }
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (mx / n, my / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    (sxy / (sxx * syy).sqrt(), pairs.len())
}

/// Pooled self-starting scores from independent sequences, with their
/// normality and serial-correlation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformCheck {
    /// Scores per sequence, for readings `m + 1 ..= length`.
    pub sequences: Vec<Vec<f64>>,
    pub ks: KsResult,
    pub autocorrelation: f64,
    pub pairs: usize,
}

impl TransformCheck {
    pub fn pooled(&self) -> impl Iterator<Item = f64> + '_ {
        self.sequences.iter().flatten().copied()
    }

    pub fn pooled_len(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }
}

/// Generates `n_sequences` i.i.d. N(μ, σ²) sequences of `length` readings,
/// uses the first `m` as warmup and scores the rest.
pub fn transform_check(
    n_sequences: u64,
    length: usize,
    m: usize,
    model: &ProcessModel,
    master_seed: u64,
) -> Result<TransformCheck> {
    if m < 3 || length <= m + 1 {
        return Err(Error::InvalidConfig(format!(
            "need warmup m >= 3 and length > m + 1, got m = {m}, length = {length}"
        )));
    }
    if n_sequences < 1 {
        return Err(Error::InvalidConfig("need at least one sequence".into()));
    }
    let sequences: Vec<Vec<f64>> = (0..n_sequences)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(master_seed, i);
            let mut stats = RunningStats::new();
            for _ in 0..m {
                stats.push(normal_sample(&mut stream, model));
            }
            let mut transform = SelfStartTransform::from_stats(stats)?;
            (m..length).map(|_| transform.score(normal_sample(&mut stream, model))).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let pooled: Vec<f64> = sequences.iter().flatten().copied().collect();
    let ks = ks_normal(&pooled)?;
    let (autocorrelation, pairs) = lag1_autocorrelation(&sequences);
    Ok(TransformCheck { sequences, ks, autocorrelation, pairs })
}
