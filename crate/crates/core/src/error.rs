//! Error types shared across the simulator.

use thiserror::Error;

/// A single violated configuration invariant, tied to the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    /// Dotted path of the offending config field, e.g. `budget.T`.
    pub field: String,
    /// Human-readable description of the violation.
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Simulator error type.
#[derive(Debug, Error)]
pub enum Error {
    /// One or more configuration invariants are violated.
    #[error("invalid configuration: {}", format_field_errors(.0))]
    InvalidConfig(Vec<FieldError>),

    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix dimensions make the requested precoder infeasible.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A channel degenerated to (numerically) zero where a direction is needed.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// An iterative numerical routine failed to converge or produced an
    /// inconsistent result.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A quantile query needs more samples than are available.
    #[error(
        "insufficient samples: level {level} needs at least {needed} samples, have {available}"
    )]
    InsufficientSamples {
        level: f64,
        needed: u64,
        available: u64,
    },

    /// A drop in a campaign failed; wraps the underlying error.
    #[error("drop {drop_index} failed: {source}")]
    Drop {
        drop_index: u64,
        #[source]
        source: Box<Error>,
    },

    /// Failure in the execution machinery itself (thread pool setup and
    /// the like), not in the model.
    #[error("internal error: {0}")]
    Internal(String),

    /// File or serialization failure at an I/O boundary.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON at an I/O boundary.
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    /// Convenience constructor for a single-field configuration error.
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig(vec![FieldError {
            field: field.into(),
            message: message.into(),
        }])
    }

    /// Attaches a drop index to an error propagating out of a campaign.
    pub fn in_drop(self, drop_index: u64) -> Self {
        Error::Drop {
            drop_index,
            source: Box::new(self),
        }
    }
}

fn format_field_errors(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(FieldError::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
