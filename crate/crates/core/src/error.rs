use thiserror::Error;

pub type Result<T> = std::result::Result<T, MfgError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MfgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model does not expose an exact transition kernel")]
    NoExactKernel,

    #[error("iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("state-action pairs without samples: {0:?}")]
    UncoveredPairs(Vec<(usize, usize)>),

    #[error("mean-field pair {index} is not ordered by stochastic dominance")]
    NotOrdered { index: usize },

    #[error("every sampled pair was degenerate: {0}")]
    DegenerateSample(String),
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(MfgError::InvalidParameter(msg()))
    }
}
