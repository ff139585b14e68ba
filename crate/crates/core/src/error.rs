use std::path::PathBuf;

use thiserror::Error;

/// Unified error type for the whole library.
///
/// Checkpoint corruption maps to the dedicated variants (`BadMagic`,
/// `UnsupportedVersion`, `Truncated`, `UnknownTensorName`, ...) so callers can
/// tell apart the failure modes without string matching.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("axis {axis} out of range for rank {rank}")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid label: {0}")]
    Label(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid model spec: {0}")]
    Spec(String),

    #[error("cannot decode image {path}: {detail}")]
    Decode { path: PathBuf, detail: String },

    #[error("dataset error: {0}")]
    Data(String),

    #[error("checkpoint has bad magic bytes")]
    BadMagic,

    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),

    #[error("checkpoint truncated: {0}")]
    Truncated(String),

    #[error("checkpoint header is not valid JSON: {0}")]
    BadHeader(String),

    #[error("checkpoint tensor `{0}` is not a parameter of this model")]
    UnknownTensorName(String),

    #[error("checkpoint tensor `{name}` has shape {found:?}, expected {expected:?}")]
    TensorShapeMismatch {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },

    #[error("checkpoint is missing tensor `{0}`")]
    MissingTensor(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
