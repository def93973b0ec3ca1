use thiserror::Error;

/// Failure modes shared by every module of the laboratory.
#[derive(Debug, Error)]
pub enum NlsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl NlsError {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            NlsError::NumericFailure(_) => 3,
            NlsError::HypothesisNotMet(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T, E = NlsError> = std::result::Result<T, E>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::NlsError::InvalidArgument(format!($($arg)*))
    };
}
pub(crate) use invalid;
