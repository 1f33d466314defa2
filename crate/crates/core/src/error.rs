use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot normalize: every importance is <= 0")]
    AllZero,
    #[error("index {index} out of range for dimensionality {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid spec: {0}")]
    SpecInvalid(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("parse error at row {row}, column {col}: {message}")]
    ParseError { row: usize, col: usize, message: String },
    #[error("non-numeric feature value {value:?} at row {row}, column {col}")]
    NonNumericFeature { row: usize, col: usize, value: String },
    #[error("target column {0:?} not found")]
    MissingTargetColumn(String),

    #[error("task mismatch: {0}")]
    TaskMismatch(String),
    #[error("only one class present in the target")]
    SingleClass,
    #[error("negative feature value at row {row}, column {col}")]
    NegativeFeature { row: usize, col: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("singular matrix")]
    SingularMatrix,
    #[error("empty training set")]
    EmptyTrain,
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ground-truth importances are uniform; R^2 is undefined")]
    DegenerateTruth,
    #[error("need at least {needed} bootstraps, got {got}")]
    InsufficientBootstraps { needed: usize, got: usize },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("degenerate selection: average subset size is 0 or p")]
    DegenerateSelection,
    #[error("maximum score is not positive")]
    NonPositiveMax,

    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("degenerate score table: {0}")]
    DegenerateTable(String),
    #[error("no critical value tabulated for k={k}, alpha={alpha}")]
    UnsupportedK { k: usize, alpha: f64 },

    #[error("cache artifact {key:?} is corrupt: {reason}")]
    CacheCorrupt { key: String, reason: String },
    #[error("sample size {size} exceeds the {available} available training rows")]
    SizeExceedsDataset { size: usize, available: usize },
    #[error("invalid job transition: {0}")]
    InvalidTransition(String),
    #[error("path {0:?} escapes the storage root")]
    PathTraversal(String),
    #[error("empty grid")]
    EmptyGrid,

    #[error("config error{}: {message}", location_suffix(.path, .line))]
    Config {
        path: Option<PathBuf>,
        line: Option<usize>,
        message: String,
    },
    #[error("unknown {kind} {name:?}")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn location_suffix(path: &Option<PathBuf>, line: &Option<usize>) -> String {
    match (path, line) {
        (Some(p), Some(l)) => format!(" in {}:{}", p.display(), l),
        (Some(p), None) => format!(" in {}", p.display()),
        (None, Some(l)) => format!(" at line {l}"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config {
            path: None,
            line: None,
            message: message.into(),
        }
    }
}
