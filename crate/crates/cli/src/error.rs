use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("{context}: {source}")]
    Numerical {
        context: &'static str,
        source: billiard_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("config {}: {source}", path.display())]
    ConfigParse { path: PathBuf, source: serde_json::Error },
}

impl CliError {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Core errors caused by bad input become validation errors, the rest numerical aborts.
    pub fn from_core(context: &'static str, source: billiard_core::Error) -> Self {
        use billiard_core::Error as E;
        match source {
            E::InvalidParameter { name, reason } => Self::validation(name, reason),
            E::LawRange(reason) => Self::validation("ensemble", reason),
            E::NotCoprime { m, n } => Self::validation("orbit", format!("({m}, {n}) is not co-prime")),
            source => Self::Numerical { context, source },
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation { .. } | Self::ConfigParse { .. } => 2,
            Self::Numerical { .. } => 3,
            Self::Io { .. } | Self::Csv { .. } => 4,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a context label to core results.
pub trait CoreContext<T> {
    fn context(self, context: &'static str) -> CliResult<T>;
}

impl<T> CoreContext<T> for billiard_core::Result<T> {
    fn context(self, context: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(context, e))
    }
}
