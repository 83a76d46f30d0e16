use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: non-monotone timestamp {next} after {prev}")]
    NonMonotone { line: usize, prev: f64, next: f64 },

    #[error("line {line}: unknown joint id `{id}`")]
    UnknownJoint { line: usize, id: String },

    #[error("line {line}: unknown link id `{id}`")]
    UnknownLink { line: usize, id: String },

    #[error("line {line}: quaternion of link `{link}` has norm {norm}")]
    NonUnitQuaternion { line: usize, link: String, norm: f64 },

    #[error("incomplete frame: missing {0}")]
    IncompleteFrame(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid skeleton config: {0}")]
    Config(String),

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
