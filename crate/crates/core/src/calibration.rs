//! Known-parameter ARL by Markov-chain discretization, and control-limit
//! calibration for a target in-control ARL.
//!
//! The interval `[0, h)` is cut into `n` cells of width `w = h / n`; the
//! CUSUM sitting in cell `i` is represented by the midpoint `c_i = (i + ½)w`.
//! From there the increment `Z - δ`, `Z ~ N(0, 1)`, moves it to
//!
//! ```text
//! cell 0      with prob  Φ(w - c_i + δ)                (includes the reflection at 0)
//! cell j ≥ 1  with prob  Φ((j+1)w - c_i + δ) - Φ(jw - c_i + δ)
//! signal      with prob  1 - Φ(h - c_i + δ)
//! ```
//!
//! and the ARL vector solves `(I - Q) L = 1`. The chart starts at `D = 0`,
//! i.e. in cell 0.

use nalgebra::{DMatrix, DVector};

use crate::distributions::phi;
use crate::{Error, Result};

/// Default number of transient states.
pub const DEFAULT_STATES: usize = 400;
/// Default relative tolerance for [`calibrate_limit`].
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
/// Largest control limit the calibration search will consider.
pub const MAX_LIMIT: f64 = 50.0;
/// Minimum number of transient states.
pub const MIN_STATES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovSpec {
    n_states: usize,
    delta: f64,
    limit: f64,
}

impl MarkovSpec {
    pub fn new(n_states: usize, delta: f64, limit: f64) -> Result<Self> {
        if n_states < MIN_STATES {
            return Err(Error::InvalidConfig(format!(
                "Markov chain needs at least {MIN_STATES} states, got {n_states}"
            )));
        }
        if !(delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("reference value {delta} is not finite")));
        }
        if !(limit > 0.0 && limit.is_finite()) {
            return Err(Error::InvalidConfig(format!("control limit must be positive, got {limit}")));
        }
        Ok(MarkovSpec { n_states, delta, limit })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    fn with_states(&self, n_states: usize) -> Self {
        MarkovSpec { n_states, ..*self }
    }
}

/// ARL from the chain at `n_states`, plus the Richardson value from the
/// `n_states` / `2 n_states` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovArl {
    pub n_states: usize,
    pub arl: f64,
    pub arl_doubled: f64,
    pub extrapolated: f64,
}

/// Rows of the transient block `Q` together with each row's absorption
/// probability, as `(Q, absorb)`.
pub fn transition_matrix(spec: &MarkovSpec) -> (DMatrix<f64>, DVector<f64>) {
    let n = spec.n_states;
    let w = spec.limit / n as f64;
    let mut q = DMatrix::zeros(n, n);
    let mut absorb = DVector::zeros(n);
    for i in 0..n {
        let centre = (i as f64 + 0.5) * w;
        // CDF of the next value at the upper edge of cell j
        let edge = |j: usize| phi(j as f64 * w - centre + spec.delta);
        let mut lower = 0.0;
        for j in 0..n {
            let upper = edge(j + 1);
            q[(i, j)] = upper - lower;
            lower = upper;
        }
        absorb[i] = 1.0 - lower;
    }
    (q, absorb)
}

/// ARL from `D = 0` on a single grid.
pub fn markov_arl_single(spec: &MarkovSpec) -> Result<f64> {
    let n = spec.n_states;
    let (q, _) = transition_matrix(spec);
    let system = DMatrix::identity(n, n) - q;
    let ones = DVector::from_element(n, 1.0);
    let solution = system.lu().solve(&ones).ok_or(Error::Singular)?;
    let arl = solution[0];
    if !arl.is_finite() || arl < 1.0 {
        return Err(Error::Singular);
    }
    Ok(arl)
}

/// Markov-chain ARL with its Richardson companion.
///
/// Representing the reflecting state `D = 0` by the midpoint `w / 2` makes
/// the error first order in the cell width (successive differences halve as
/// the grid doubles), so the extrapolation is `2 L(2n) - L(n)`.
pub fn markov_arl(spec: &MarkovSpec) -> Result<MarkovArl> {
    let arl = markov_arl_single(spec)?;
    let arl_doubled = markov_arl_single(&spec.with_states(2 * spec.n_states))?;
    Ok(MarkovArl { n_states: spec.n_states, arl, arl_doubled, extrapolated: 2.0 * arl_doubled - arl })
}

/// Control limit whose extrapolated Markov-chain ARL (at [`DEFAULT_STATES`]
/// and twice that) hits `target_arl` within relative tolerance `tol`.
///
/// The bracket grows by doubling from `h = 0.5`; bisection then relies on
/// the ARL being strictly increasing in `h`.
pub fn calibrate_limit(delta: f64, target_arl: f64, tol: f64) -> Result<f64> {
    calibrate_limit_with(delta, target_arl, tol, DEFAULT_STATES)
}

pub fn calibrate_limit_with(delta: f64, target_arl: f64, tol: f64, n_states: usize) -> Result<f64> {
    if !(target_arl > 1.0 && target_arl.is_finite()) {
        return Err(Error::InvalidConfig(format!("target ARL must exceed 1, got {target_arl}")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let arl_at = |h: f64| -> Result<f64> { Ok(markov_arl(&MarkovSpec::new(n_states, delta, h)?)?.extrapolated) };
    let accept = |arl: f64| (arl - target_arl).abs() <= tol * target_arl;

    let mut lo = 0.0;
    let mut hi = 0.5;
    loop {
        let arl = arl_at(hi)?;
        if accept(arl) {
            return Ok(hi);
        }
        if arl > target_arl {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > MAX_LIMIT {
            // last chance at the bound itself
            let arl = arl_at(MAX_LIMIT)?;
            if accept(arl) {
                return Ok(MAX_LIMIT);
            }
            if arl < target_arl {
                return Err(Error::Unreachable { target: target_arl, max_limit: MAX_LIMIT });
            }
            hi = MAX_LIMIT;
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let arl = arl_at(mid)?;
        if accept(arl) {
            return Ok(mid);
        }
        if arl < target_arl {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    // the ARL curve is continuous, so this means the target lies below the
    // h -> 0 limit 1 / (1 - Φ(δ))
    Err(Error::Unreachable { target: target_arl, max_limit: MAX_LIMIT })
}
