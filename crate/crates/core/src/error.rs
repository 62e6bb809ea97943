//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A serialized artifact (tensor file, trace, report) is malformed.
    #[error("format error: {0}")]
    Format(String),

    /// An input value violates a precondition (bad image, empty tensor, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A configuration parameter is out of its valid range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Two operands have incompatible shapes.
    #[error("shape error: {0}")]
    Shape(String),

    /// An index or rectangle is out of bounds.
    #[error("range error: {0}")]
    Range(String),

    /// A problem instance exceeds an enumeration or allocation cap.
    #[error("size error: {0}")]
    Size(String),

    /// A wire message could not be decoded; `offset` is the byte position
    /// at which decoding failed.
    #[error("protocol error at byte {offset}: {message}")]
    Protocol { offset: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn protocol(offset: usize, message: impl Into<String>) -> Self {
        Error::Protocol {
            offset,
            message: message.into(),
        }
    }
}
