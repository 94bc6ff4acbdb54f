use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("compact representation construction failed: {0}")]
    Construction(String),

    #[error("exact evaluation refused: estimated {digits} decimal digits exceeds cutoff {cutoff}")]
    EvalRefused { digits: u64, cutoff: u64 },

    /// The denominator-lifting precision needed for a modular evaluation
    /// exceeds the configured budget; retry with a larger budget.
    #[error("modular evaluation needs {needed} extra digits of {prime}-adic precision (budget {budget})")]
    Escalate { prime: u64, needed: u64, budget: u64 },

    #[error("regulator provider failed: {0}")]
    Provider(String),

    #[error("valuation cap {cap} exceeded for prime {prime}")]
    CapExceeded { prime: u64, cap: u32 },

    #[error("resume error: {0}")]
    Resume(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
