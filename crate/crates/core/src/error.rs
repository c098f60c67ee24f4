use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse mesh {path}: {message}")]
    MeshParse { path: PathBuf, message: String },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("dataset error in model `{model}`: {message}")]
    Dataset { model: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("vocabulary training corpus has {available} features but {requested} words were requested; use a smaller vocabulary size")]
    CorpusTooSmall { available: usize, requested: usize },

    #[error("histograms come from different vocabularies ({0:?} vs {1:?})")]
    VocabularyMismatch(
        crate::features::VocabularyKind,
        crate::features::VocabularyKind,
    ),

    #[error("part `{0}` has no encoded images")]
    Unencoded(String),

    #[error("unknown category `{category}`; available: {available:?}")]
    UnknownCategory {
        category: String,
        available: Vec<String>,
    },

    #[error("unknown class `{class}`; available: {available:?}")]
    UnknownClass {
        class: String,
        available: Vec<String>,
    },

    #[error("unknown part `{0}`")]
    UnknownPart(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index file error: {0}")]
    IndexFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than a defect in the engine.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::IndexFormat(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
