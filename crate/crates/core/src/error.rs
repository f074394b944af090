use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("unknown region `{0}`")]
    UnknownRegion(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss in stage {stage} at iteration {iteration} (term {term})")]
    NonFinite {
        stage: String,
        iteration: usize,
        term: String,
    },

    #[error("model load failed for adapter `{adapter}`: {reason}")]
    ModelLoad { adapter: String, reason: String },

    #[error("image smaller than the {window}x{window} window ({height}x{width})")]
    WindowTooLarge {
        window: usize,
        height: usize,
        width: usize,
    },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn shape(
        context: impl Into<String>,
        expected: impl std::fmt::Display,
        actual: impl std::fmt::Display,
    ) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
