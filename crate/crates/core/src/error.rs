use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("weight exponent must be a finite positive number, got {0}")]
    InvalidExponent(f64),

    #[error("invalid valuations: {0}")]
    InvalidValuations(String),

    #[error("invalid bids: {0}")]
    InvalidBids(String),

    #[error("all bids are zero; the allocation is undefined")]
    AllZeroBids,

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure {
        what: &'static str,
        iterations: usize,
        residual: f64,
        /// Best iterate reached before giving up, when there is one.
        best: Option<Vec<f64>>,
    },

    #[error("root bracket failure: h({lo}) = {h_lo:e}, h({hi}) = {h_hi:e}; expected signs (-, +)")]
    BracketFailure { lo: f64, hi: f64, h_lo: f64, h_hi: f64 },

    #[error("instance (alpha={alpha}, n={n}, p={p}): {source}")]
    Instance {
        alpha: f64,
        n: usize,
        p: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips any [`Error::Instance`] wrappers.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Instance { source, .. } => source.root_cause(),
            other => other,
        }
    }
}
