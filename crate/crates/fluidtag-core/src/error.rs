//! Error type shared by all library modules.

use thiserror::Error;

/// Errors produced by the co-design library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input value violates a precondition (non-finite, negative mass,
    /// zero grid count, ...).
    #[error("invalid {what}: {details}")]
    InvalidInput {
        /// Short name of the offending input.
        what: &'static str,
        /// Human-readable explanation.
        details: String,
    },

    /// A value fell outside the interval a contract requires.
    #[error("{what} out of range: {details}")]
    OutOfRange {
        /// Short name of the offending quantity.
        what: &'static str,
        /// Human-readable explanation.
        details: String,
    },

    /// An electromagnetic provider has no data for the requested point.
    #[error("no coverage: {0}")]
    Coverage(String),

    /// A data file failed to parse. Line numbers are 1-based.
    #[error("{path}:{line}: {details}")]
    Parse {
        /// File the error occurred in (or a placeholder for in-memory input).
        path: String,
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        details: String,
    },

    /// A least-squares system was rank deficient or otherwise degenerate.
    #[error("degenerate system: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, details: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            details: details.into(),
        }
    }

    pub(crate) fn range(what: &'static str, details: impl Into<String>) -> Self {
        Error::OutOfRange {
            what,
            details: details.into(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
