use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: malformed input: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: duplicate rating for user {user:?} and item {item:?}")]
    DuplicateRating {
        line: usize,
        user: String,
        item: String,
    },
    #[error("line {line}: rating {value} outside scale [{min}, {max}]")]
    OutOfScale {
        line: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("performance table is missing {measure:?} for ({dataset:?}, {algorithm:?})")]
    IncompleteTable {
        dataset: String,
        algorithm: String,
        measure: String,
    },
    #[error("no direction declared for measure {0:?}")]
    UnknownMeasure(String),
    #[error("graph has no edges to walk")]
    EmptyGraph,
    #[error("vocabulary needs at least one document")]
    EmptyCorpus,
    #[error("token {0:?} is not in the vocabulary")]
    UnknownToken(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dataset has no ratings")]
    EmptyDataset,
    #[error("feature names do not match")]
    NameMismatch,
    #[error("need at least {needed} ratings for {folds}-fold evaluation, got {got}")]
    TooFewRatings {
        needed: usize,
        folds: usize,
        got: usize,
    },
    #[error("dataset {dataset:?} has no score for measure {measure:?}")]
    MissingMeasure { dataset: String, measure: String },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("metadatabase is empty")]
    EmptyMetabase,
    #[error("k = {k} exceeds the {rows} available rows")]
    KTooLarge { k: usize, rows: usize },
    #[error("rankings cover different algorithm sets")]
    AlgorithmSetMismatch,
    #[error("leave-one-out needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),
    #[error("no critical value tabulated for k = {0} strategies")]
    UnsupportedK(usize),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 config error, 3 data error, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::KTooLarge { .. } | Error::UnsupportedK(_) => 2,
            Error::Numeric(_) | Error::DegenerateMatrix(_) | Error::DegenerateData(_) => 4,
            _ => 3,
        }
    }
}
