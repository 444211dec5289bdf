use thiserror::Error;

/// Errors produced across the feature-extraction and learning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A build references a work item that was not supplied.
    #[error("build {build_id}: unresolved work item {work_item_id}")]
    Ingest {
        build_id: String,
        work_item_id: String,
    },

    /// A record violates its schema. `line` is 1-based when the record came from a file.
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Schema { line: Option<usize>, message: String },

    #[error("numerical failure: {0}")]
    Numerics(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("window is empty")]
    EmptyWindow,

    #[error("model has no stored instances")]
    EmptyModel,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn schema(message: impl Into<String>) -> Self {
        Error::Schema {
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn argument(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }

    /// True for failures that stem from malformed input rather than the environment.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io(_) => false,
            Error::Csv(e) => !e.is_io_error(),
            Error::Json(e) => !e.is_io(),
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
