//! Simulation laboratory for one-sided CUSUM charts on normal data.
//!
//! Three ways of scoring observations are provided: known parameters,
//! frozen plug-in estimates from a Phase-I sample, and the self-starting
//! transform that studentizes each reading against running estimates and
//! maps it back to an exact N(0,1) score. On top of the engines sit Monte
//! Carlo run-length studies (unconditional ARL, conditional ARL given a
//! fixed warmup, plug-in bias, a two-sample t-test analogue) and a
//! Markov-chain ARL solver used to calibrate control limits.

// NaN must fail the `!(x > 0.0)` style guards
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod distributions;
pub mod engines;
mod error;
pub mod simulation;

pub use error::{Error, Result};
