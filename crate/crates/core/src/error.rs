use thiserror::Error;

/// Errors raised by the estimators, policies and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MebError {
    #[error("dimension mismatch at round {round}: expected {expected}, got {found}")]
    DimensionMismatch {
        round: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-positive propensity {propensity} at round {round}")]
    NonPositivePropensity { round: usize, propensity: f64 },

    #[error("error covariance at round {round} is not symmetric PSD")]
    NonPsdErrorCov { round: usize },

    #[error("round index {found} out of order (expected {expected})")]
    RoundOutOfOrder { expected: usize, found: usize },

    #[error("action {action} out of range for {num_actions} actions")]
    ActionOutOfRange { action: usize, num_actions: usize },

    #[error("no data for action {action}")]
    NoDataForAction { action: usize },

    #[error("singular design for action {action} (condition number {condition:e})")]
    SingularDesign { action: usize, condition: f64 },

    #[error("invalid policy distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("replicate {replicate} (seed {seed}) aborted: {source}")]
    ReplicationFailed {
        replicate: usize,
        seed: u64,
        source: Box<MebError>,
    },
}

impl MebError {
    /// Process exit code for the command-line tool: 2 for configuration
    /// problems, 3 for numerical aborts, 1 for i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            MebError::ConfigInvalid(_) => 2,
            MebError::Io(_) => 1,
            MebError::ReplicationFailed { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}

impl From<std::io::Error> for MebError {
    fn from(e: std::io::Error) -> Self {
        MebError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MebError>;
