use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A score fed to the CUSUM recursion was NaN or infinite.
    #[error("non-finite score {0} fed to the CUSUM recursion")]
    NonFiniteScore(f64),

    #[error("degenerate warmup: sample standard deviation is zero")]
    DegenerateWarmup,

    #[error("need at least {needed} observations, have {have}")]
    TooFewObservations { needed: u64, have: u64 },

    #[error("singular linear system in Markov-chain ARL")]
    Singular,

    #[error("target ARL {target} is not reachable with a control limit in (0, {max_limit}]")]
    Unreachable { target: f64, max_limit: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
