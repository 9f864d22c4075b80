//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // Schema / ingestion
    #[error("column '{0}' not found")]
    MissingColumn(String),
    #[error("duplicate column '{0}'")]
    DuplicateColumn(String),
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("bad value '{value}' in column '{column}' at row {row}")]
    BadValue {
        column: String,
        row: usize,
        value: String,
    },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid cohort: {0}")]
    InvalidCohort(String),
    #[error("cannot drop the outcome column '{0}'")]
    CannotDropOutcome(String),

    // Splitting
    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),
    #[error("at least 2 folds with 2 replicates each are required ({0})")]
    InsufficientFolds(String),

    // Learners / metrics
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("feature mismatch: model expects {expected} columns, got {got}")]
    FeatureMismatch { expected: usize, got: usize },
    #[error("input length mismatch: {0}")]
    LengthMismatch(String),
    #[error("rate undefined: {0}")]
    UndefinedRate(String),
    #[error("group '{0}' has no positive samples")]
    NoPositivesInGroup(String),
    #[error("empty (group, label) cell: {0}")]
    EmptyCell(String),
    #[error("empty hyper-parameter grid")]
    EmptyGrid,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // Mitigation
    #[error("repair level must be in [0, 1], got {0}")]
    BadLambda(f64),

    // Synthesis
    #[error("invalid cohort spec: {0}")]
    SpecInvalid(String),

    // Harness / reporting
    #[error("report incomplete: {0}")]
    IncompleteReport(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
