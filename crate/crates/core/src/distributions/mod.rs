//! Scalar special functions and random variate generation.
//!
//! Everything here is a pure function except [`RngStream`], which is owned
//! by exactly one replication at a time.

mod normal;
mod rng;
mod student_t;

pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub use rng::{derive_seed, normal_sample, RngStream};
pub use student_t::{ln_gamma, regularized_incomplete_beta, student_t_cdf};

pub(crate) use normal::{phi, phi_inv};
pub(crate) use student_t::t_lower_tail;

use crate::{Error, Result};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!("probability {value} outside [0, 1]")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Degrees of freedom of a Student t law, at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DegreesOfFreedom(u64);

impl DegreesOfFreedom {
    pub fn new(nu: u64) -> Result<Self> {
        if nu >= 1 {
            Ok(DegreesOfFreedom(nu))
        } else {
            Err(Error::domain("degrees of freedom must be at least 1"))
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }
}

/// True mean and standard deviation of the normal data generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessModel {
    mu: f64,
    sigma: f64,
}

impl ProcessModel {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::domain(format!("process mean {mu} is not finite")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("process standard deviation must be positive and finite, got {sigma}")));
        }
        Ok(ProcessModel { mu, sigma })
    }

    /// N(0, 1).
    pub fn standard() -> Self {
        ProcessModel { mu: 0.0, sigma: 1.0 }
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for ProcessModel {
    fn default() -> Self {
        Self::standard()
    }
}
