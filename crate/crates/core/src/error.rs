use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("reward/support mismatch: {rewards} rewards for {symbols} symbols")]
    RewardSupportMismatch { rewards: usize, symbols: usize },

    #[error("support mismatch between the two laws")]
    SupportMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge (estimate {estimate}, error {error})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("limit did not stabilize (last estimates {first} and {second})")]
    LimitUnstable { first: f64, second: f64 },

    #[error("infeasible constraint: target {target} is not below the supremum {supremum}")]
    Infeasible { target: f64, supremum: f64 },

    #[error("tail hypothesis not established: {0}")]
    TailHypothesis(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("unknown divergence `{0}`")]
    UnknownDivergence(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
