use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has no rows")]
    EmptyMatrix,
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NonSquare { row: usize, len: usize, expected: usize },
    #[error("negative weight {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("non-finite weight at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("row {0} has no positive weight")]
    ZeroRow(usize),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("i/o error")]
    Io(#[from] std::io::Error),
    #[error("json error")]
    Json(#[from] serde_json::Error),
    #[error("csv error")]
    Csv(#[from] csv::Error),

    #[error("empty input")]
    EmptyInput,
    #[error("weights must be non-negative and sum to 1 (sum = {0})")]
    WeightSumInvalid(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("node set is empty")]
    EmptySet,
    #[error("node {node} is out of range for a network of {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("node set is not cohesive")]
    NotCohesive,
    #[error("node {node} has out-degree {degree}; exact decisive-link search supports at most {limit}")]
    DegreeTooLarge { node: usize, degree: usize, limit: usize },
    #[error("network has {0} nodes; subset enumeration supports at most 64")]
    TooManyNodes(usize),
    #[error("cohesion report is incomplete (enumeration budget exhausted)")]
    IncompleteReport,

    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("missing round: {0}")]
    MissingRound(String),
    #[error("all paired differences are zero")]
    AllZeroDifferences,
}
