use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing survival file in {0}")]
    MissingSurvivalFile(PathBuf),
    #[error("no layer files found in {0}")]
    NoLayers(PathBuf),
    #[error("empty sample intersection across layers")]
    EmptySampleIntersection,
    #[error("non-numeric cell {value:?} in {file} (line {line}, column {column})")]
    NonNumeric { file: String, line: usize, column: usize, value: String },
    #[error("duplicate sample id {id:?} in {file}")]
    DuplicateSample { file: String, id: String },
    #[error("duplicate feature name {name:?} in layer {layer:?}")]
    DuplicateFeature { layer: String, name: String },
    #[error("malformed file {file}: {reason}")]
    Malformed { file: String, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for width {width}")]
    IndexOutOfRange { index: usize, width: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("no events")]
    NoEvents,
    #[error("no admissible pairs")]
    NoAdmissiblePairs,
    #[error("empty group")]
    EmptyGroup,
    #[error("model did not converge")]
    NotConverged,
    #[error("stale cache: parameters changed since the forward pass")]
    StaleCache,
    #[error("model is not fitted")]
    NotFitted,
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("singular value decomposition failed to converge")]
    SvdFailed,
    #[error("unsupported model kind for this operation: {0}")]
    UnsupportedModel(String),
    #[error("no common folds")]
    NoCommonFolds,
    #[error("all folds failed")]
    AllFoldsFailed,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
