//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by table construction, injection, imputation, learning,
/// metrics, and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed delimited input (ragged rows, bad quoting).
    #[error("parse error at data row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Structural problems: duplicate headers, incompatible schemas.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell that cannot be coerced to the requested column kind.
    #[error("type error at row {row}, column '{column}': {message}")]
    CellType {
        row: usize,
        column: String,
        message: String,
    },

    /// A column name that does not exist in the table.
    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    /// An argument outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A violated operation precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A statistic that is undefined on the given data (e.g. zero variance).
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    /// Imputer or learner fitting failed.
    #[error("fit error: {0}")]
    Fit(String),

    /// Applying a fitted imputer failed.
    #[error("transform error: {0}")]
    Transform(String),

    /// Design-matrix encoding failed.
    #[error("encode error: {0}")]
    Encode(String),

    /// Prediction on incompatible data.
    #[error("predict error: {0}")]
    Predict(String),

    /// Invalid benchmark plan.
    #[error("plan error: {0}")]
    Plan(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
