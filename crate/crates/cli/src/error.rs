use std::path::PathBuf;

use risk_core::Error as CoreError;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Process exit code for input, schema or validation problems.
pub const EXIT_INPUT: u8 = 2;
/// Process exit code for numeric or solver failures.
pub const EXIT_NUMERIC: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Invalid {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("{context}: {source}")]
    Numeric {
        context: String,
        #[source]
        source: CoreError,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Numeric { .. } => EXIT_NUMERIC,
            _ => EXIT_INPUT,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    /// Classify a core error raised while computing (not while validating).
    pub fn from_core(context: impl Into<String>, source: CoreError) -> Self {
        let context = context.into();
        if is_numeric(&source) {
            Self::Numeric { context, source }
        } else {
            Self::Invalid { context, source }
        }
    }

    /// A core error raised by a `validate` call is always an input problem.
    pub fn invalid(context: impl Into<String>, source: CoreError) -> Self {
        Self::Invalid { context: context.into(), source }
    }
}

fn is_numeric(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::SolverFailure(_)
            | CoreError::NonFiniteObjective { .. }
            | CoreError::NonFinite
            | CoreError::NotMonotone
            | CoreError::DomainError { .. }
            | CoreError::BadBracket { .. }
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from_core("x", CoreError::SolverFailure("s".into())).exit_code(), 1);
        assert_eq!(CliError::from_core("x", CoreError::NonFinite).exit_code(), 1);
        assert_eq!(CliError::from_core("x", CoreError::BadSpec("b".into())).exit_code(), 2);
        assert_eq!(CliError::from_core("x", CoreError::EmptyInput).exit_code(), 2);
        assert_eq!(CliError::invalid("x", CoreError::NonFinite).exit_code(), 2);
        assert_eq!(CliError::config("bad").exit_code(), 2);
    }
}
