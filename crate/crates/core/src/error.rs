use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Unknown identifier or mutually incompatible options.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Gold and predicted corpora do not line up.
    #[error("alignment error in sequence {sequence}: {detail}")]
    Alignment { sequence: usize, detail: String },

    #[error("line {line}: malformed line: {detail}")]
    MalformedLine { line: usize, detail: String },

    #[error("line {line}: malformed annotation: {detail}")]
    MalformedAnnotation { line: usize, detail: String },

    #[error("input is not valid UTF-8 (byte offset {offset})")]
    Encoding { offset: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("nested entities: {0}")]
    NestedEntities(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
