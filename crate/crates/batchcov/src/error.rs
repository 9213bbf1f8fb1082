use thiserror::Error;

/// Errors surfaced by model construction, estimators and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: String, reason: String },

    #[error("covariance matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("tensor is not symmetric under index permutation (max deviation {0:.3e})")]
    NotSymmetric(f64),

    #[error("need at least {required} samples for cumulant estimation, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("singular empirical covariance")]
    SingularCovariance,

    #[error(
        "gradient first coordinate too small after permutation (|u1| = {0:.3e}); \
         the conditioning step needs a nonzero first gradient coordinate"
    )]
    DegenerateGradient(f64),

    #[error("{rejected} of {total} replications rejected by the variance guard (> 1%)")]
    TooManyRejections { rejected: u64, total: u64 },

    #[error("trajectory visits the atom fewer than 2 times; simulate a longer trajectory")]
    TooFewAtomVisits,

    #[error("trajectory of length {got} is too short: need {required}")]
    TrajectoryTooShort { required: usize, got: usize },

    #[error("insufficient replications for slope fit: need at least {required} per grid point")]
    InsufficientReps { required: u64 },

    #[error("config error in field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
