use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Exhaustive matching was asked to enumerate more than `cap!` permutations.
    #[error("exhaustive matching refused: {m} pairs exceeds the cap of {cap}")]
    TooLarge { m: usize, cap: usize },

    /// Results could not be written.
    #[error("writing output: {0}")]
    Output(String),

    /// A configuration key was unknown or carried an invalid value.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
