use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),

    #[error("node {0} has degree 0; call add_self_loops before normalizing")]
    ZeroDegree(usize),

    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("graph is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("missing bundle file {0}")]
    MissingFile(PathBuf),

    #[error("label {label} of node {node} is outside 0..{num_classes}")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        num_classes: usize,
    },

    #[error("malformed {file}: {detail}")]
    Parse { file: String, detail: String },

    #[error("class {class} has {available} nodes but {required} are required")]
    InsufficientClass {
        class: usize,
        available: usize,
        required: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mask is empty")]
    EmptyMask,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping of [`Error`](enum@Error) variants for callers that only need to know
/// whose fault a failure was.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad settings or arguments.
    Config,
    /// Missing, malformed or inconsistent input data.
    Data,
    /// NaN/inf during computation.
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::EmptyMask => ErrorKind::Config,
            Error::Numerical(_) | Error::NonFinite(_) => ErrorKind::Numerical,
            Error::NodeOutOfRange(..)
            | Error::ZeroDegree(_)
            | Error::DimensionMismatch { .. }
            | Error::Disconnected { .. }
            | Error::MissingFile(_)
            | Error::LabelOutOfRange { .. }
            | Error::Parse { .. }
            | Error::InsufficientClass { .. }
            | Error::Io { .. }
            | Error::Json { .. } => ErrorKind::Data,
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> Error {
        let path = path.into();
        move |source| Error::Json { path, source }
    }

    pub(crate) fn shape(op: &'static str, expected: impl ToString, got: impl ToString) -> Error {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
