use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped by the exit-status class the command line maps them to:
/// configuration problems, data problems (parsing, schema, encoding), and
/// numeric problems (shape mismatches, divergence, failed gradient checks).
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numeric error in {group}: {message}")]
    Numeric { group: String, message: String },

    #[error("training diverged at epoch {epoch}, batch {batch}: cost = {cost}")]
    Divergence { epoch: usize, batch: usize, cost: f64 },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Coarse error class, used to pick a process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::Schema(_)
            | Error::Row { .. }
            | Error::Consistency(_)
            | Error::EmptyInput(_)
            | Error::Encoding(_)
            | Error::ModelFormat(_)
            | Error::Csv(_)
            | Error::Io(_) => ErrorClass::Data,
            Error::Dimension(_) | Error::Numeric { .. } | Error::Divergence { .. } => {
                ErrorClass::Numeric
            }
        }
    }

    pub(crate) fn numeric(group: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Numeric {
            group: group.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
