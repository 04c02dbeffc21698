use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation at the coordinate singularity r = 0.
    #[error("singular evaluation at r = {r}")]
    Singularity { r: f64 },

    /// A configuration value violates a precondition. `key` names the
    /// offending configuration entry.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    /// Array shapes or sizes that do not match.
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
