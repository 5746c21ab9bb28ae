use std::path::PathBuf;

use thiserror::Error;

use crate::geodata::{Parameter, Task};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: line {line}: malformed row: {reason}", path.display())]
    MalformedRow { path: PathBuf, line: u64, reason: String },

    #[error("{}: line {line}: coordinate ({lat}, {lon}) is outside [-90,90] x [-180,180]", path.display())]
    CoordinateOutOfRange {
        path: PathBuf,
        line: u64,
        lat: f64,
        lon: f64,
    },

    #[error("{}: line {line}: {parameter} value {value} is out of range", path.display())]
    ValueOutOfRange {
        path: PathBuf,
        line: u64,
        parameter: Parameter,
        value: f64,
    },

    #[error("{}: expected header `{expected}`, found `{found}`", path.display())]
    HeaderMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{}: line {line}: expected {expected} columns, found {found}", path.display())]
    ColumnCount {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("{}: line {line}: label must be 0 or 1, found `{found}`", path.display())]
    InvalidLabel { path: PathBuf, line: u64, found: String },

    #[error("degenerate denominator: {0} sums to zero")]
    DegenerateDenominator(&'static str),

    #[error("missing required layer: {0}")]
    MissingLayer(Parameter),

    #[error("no mask reason is known for land-cover code {0}")]
    UnknownMaskCode(i64),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has {0} samples; split scoring supports at most {max}", max = crate::learners::MAX_TRAINING_SAMPLES)]
    DatasetTooLarge(usize),

    #[error("invalid {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("length mismatch: {predictions} predictions vs {truth} labels")]
    LengthMismatch { predictions: usize, truth: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("confusion matrix has no entries")]
    EmptyMatrix,

    #[error("cannot form {k} folds from {samples} samples")]
    InvalidFoldCount { k: usize, samples: usize },

    #[error("schema mismatch: data is for {data}, model is for {model}")]
    SchemaMismatch { data: Task, model: Task },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
