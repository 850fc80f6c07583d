use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid input configuration; `path` is the dotted field path.
    #[error("invalid configuration at `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(path: impl Into<String>, msg: impl fmt::Display) -> Self {
        Error::Config { path: path.into(), msg: msg.to_string() }
    }

    pub fn domain(msg: impl fmt::Display) -> Self {
        Error::Domain(msg.to_string())
    }

    pub fn numerical(msg: impl fmt::Display) -> Self {
        Error::Numerical(msg.to_string())
    }
}
