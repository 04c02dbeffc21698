//! Error type of the driver and its mapping to process exit codes.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A configuration entry is missing, malformed or out of range.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A persisted artifact does not have the expected layout.
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },

    /// The computation ran but did not meet its own success criterion.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Core(swpv_core::Error),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config { key: key.to_string(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Schema { path: path.into(), message: message.into() }
    }

    /// 2 for configuration errors, 3 for numerical failures, 1 for I/O and
    /// artifact errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Core(swpv_core::Error::Config { .. }) => 2,
            CliError::Numerical(_) | CliError::Core(_) => 3,
            CliError::Io { .. } | CliError::Schema { .. } => 1,
        }
    }
}

impl From<swpv_core::Error> for CliError {
    fn from(e: swpv_core::Error) -> Self {
        match e {
            swpv_core::Error::Config { key, message } => CliError::Config { key, message },
            other => CliError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::config("grid.J", "x").exit_code(), 2);
        let core = swpv_core::Error::Config { key: "nonlinear.p".into(), message: "x".into() };
        let e = CliError::from(core);
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("nonlinear.p"));
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 3);
        assert_eq!(CliError::from(swpv_core::Error::Contract("x".into())).exit_code(), 3);
        assert_eq!(CliError::schema("a.csv", "row 3").exit_code(), 1);
    }
}
