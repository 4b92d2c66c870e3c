use alignbounds_core::Error as CoreError;
use serde_json::json;

/// Exit code for a failed computation.
pub const EXIT_MODULE: i32 = 1;
/// Exit code for an unusable configuration or instance file.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Module(#[from] CoreError),

    #[error("{0}")]
    CrossCheck(String),

    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_MODULE,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::CrossCheck(_) => "cross_check",
            CliError::Output(_) => "output",
            CliError::Module(e) => match e {
                CoreError::InvalidDistribution(_) => "invalid_distribution",
                CoreError::RewardSupportMismatch { .. } => "reward_support_mismatch",
                CoreError::SupportMismatch => "support_mismatch",
                CoreError::InvalidParameter { .. } => "invalid_parameter",
                CoreError::Quadrature { .. } => "quadrature",
                CoreError::LimitUnstable { .. } => "limit_unstable",
                CoreError::Infeasible { .. } => "infeasible",
                CoreError::TailHypothesis(_) => "tail_hypothesis",
                CoreError::Solver(_) => "solver",
                CoreError::UnknownDivergence(_) => "unknown_divergence",
            },
        }
    }

    /// One line of JSON, no trailing newline.
    pub fn to_json_line(&self) -> String {
        json!({ "error": { "kind": self.kind(), "message": self.to_string() } }).to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;
