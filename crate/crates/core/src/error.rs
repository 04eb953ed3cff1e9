use thiserror::Error;

/// Errors produced by the estimation, simulation and inference routines.
#[derive(Debug, Error)]
pub enum FractalError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("path has {got} observations, need at least {need}")]
    PathTooShort { got: usize, need: usize },

    #[error("lag {lag} out of range for a path of {n} observations")]
    LagOutOfRange { lag: usize, n: usize },

    #[error("degenerate variogram: zero value at lag {lag}")]
    DegenerateVariogram { lag: usize },

    #[error("robust statistic nonpositive at lag {lag} ({value:e}): increase kappa or n")]
    NonpositiveRobustStatistic { lag: usize, value: f64 },

    #[error(
        "circulant embedding not nonnegative definite: most negative eigenvalue {min_eigenvalue:e} \
         (max {max_eigenvalue:e}) at embedding size {size}"
    )]
    EmbeddingFailed {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        size: usize,
    },

    #[error("model {0} is not stationary and has no autocorrelation function")]
    NotStationary(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("alpha = {alpha} is outside the CLT regime (-1/2, 1/4)")]
    OutsideCltRegime { alpha: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl FractalError {
    /// True for failures caused by the data rather than the caller's parameters.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FractalError::DegenerateVariogram { .. }
                | FractalError::NonpositiveRobustStatistic { .. }
                | FractalError::EmbeddingFailed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, FractalError>;

pub(crate) fn invalid(msg: impl Into<String>) -> FractalError {
    FractalError::InvalidParameter(msg.into())
}
