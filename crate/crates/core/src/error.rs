use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state sequence: {0}")]
    Sequence(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("{source_name}:{line}: {message}")]
    Ingest {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("policy iteration did not converge after {iterations} iterations (last distance {distance:e})")]
    NonConvergence { iterations: usize, distance: f64 },

    #[error("household {household} failed in round {round}: {message}")]
    Household {
        household: usize,
        round: usize,
        message: String,
    },

    #[error("report error: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn ingest(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Ingest {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}
