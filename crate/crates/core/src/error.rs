use thiserror::Error;

/// Errors raised by the distribution algebra, pricing, market and dynamics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("convolution output exceeds the size cap of {cap} support points")]
    SizeLimit { cap: usize },

    #[error("numeric range exceeded: {0}")]
    Range(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A market hypothesis (nonempty coverage sets, known insurers) does not hold.
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The action was computed against best quotes that are no longer current.
    #[error("stale action: {0}")]
    StaleAction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
