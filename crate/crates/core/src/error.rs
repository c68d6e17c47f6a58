use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a documented invariant (negative time, zero rate, ...).
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    /// Array sizes disagree with the model or worker count.
    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },

    /// A policy breaks one of the split / allocation constraints.
    #[error("infeasible policy: {0}")]
    Policy(String),

    #[error("layer range {from}..={to} outside 1..={n_layers}")]
    LayerRange {
        from: usize,
        to: usize,
        n_layers: usize,
    },

    #[error("malformed profile: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
