//! CLI error categories with stable exit codes: io (3), format (4),
//! domain (5). Usage errors exit with clap's code 2.

use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub fn io_path(verb: &str, path: &Path) -> impl FnOnce(std::io::Error) -> CliError {
        Self::io(format!("{verb} {}", path.display()))
    }

    pub fn format(message: impl Into<String>) -> CliError {
        CliError::Format(message.into())
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Format(_) => "format",
            CliError::Domain(_) => "domain",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Format(_) => 4,
            CliError::Domain(_) => 5,
        }
    }
}

macro_rules! domain_from {
    ($($ty:ty),+) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Domain(e.to_string())
            }
        })+
    };
}

domain_from!(
    convpers::grid::GridError,
    convpers::complex::ComplexError,
    convpers::persistence::PersistenceError,
    convpers::metrics::MetricError,
    convpers::transforms::TransformError,
    convpers::vectorize::VectorizeError,
    convpers::learn::LearnError
);

pub type CliResult<T> = Result<T, CliError>;
