use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across ingestion, fitting and classification.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{path}: cannot read file: {message}")]
    Io { path: PathBuf, message: String },

    #[error("{path}: malformed CSV: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("missing column `{column}`")]
    MissingColumn { column: String },

    #[error("row {row}: `{column}` must be positive, got {value}")]
    NonPositiveValue {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("row {row}: `{column}` is not a number: {raw:?}")]
    BadNumber {
        row: usize,
        column: String,
        raw: String,
    },

    #[error("row {row}: unknown development mode {mode:?}")]
    UnknownMode { row: usize, mode: String },

    #[error("row {row}: cannot parse date {raw:?}")]
    BadDate { row: usize, raw: String },

    #[error("row {row}: completion year {year} outside [1960, 2100]")]
    YearOutOfRange { row: usize, year: i32 },

    #[error("record {id}: start date plus duration does not fall in completion year {year}")]
    InconsistentDates { id: String, year: i32 },

    #[error("schema config does not match data: {0}")]
    ConfigMismatch(String),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("dataset has no records")]
    EmptyDataset,

    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("target year index {target} precedes training year index {record}")]
    TargetBeforeTraining { target: i32, record: i32 },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("kappa must lie in (0, 1), got {0}")]
    BadKappa(f64),

    #[error("need at least {needed} observations, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("sample has zero variance")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("measured values are constant; relative error is undefined")]
    ConstantMeasured,

    #[error("record {id}: level {level:?} of `{term}` is not in the model spec")]
    UnknownLevel {
        id: String,
        term: String,
        level: String,
    },

    #[error("record {id}: missing attribute `{term}`")]
    MissingAttribute { id: String, term: String },

    #[error("not well-formed: {n_effective} weighted observations for {p} explanatory variables (need {})", p + 2)]
    NotWellFormed { n_effective: usize, p: usize },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("dataset never accumulates a well-formed training set (need {needed} projects)")]
    InsufficientData { needed: usize },

    #[error("record {0} has no start date")]
    MissingStartDate(String),

    #[error("bandwidth {0} has no defined relative error")]
    UndefinedPoint(f64),

    #[error("{defined} of {total} grid points are defined; need at least half")]
    TooManyUndefined { defined: usize, total: usize },

    #[error("bad process spec: {0}")]
    BadSpec(String),

    #[error("nothing selected to render")]
    EmptySelection,

    #[error("serialization failed: {0}")]
    Serialization(String),
}

impl Error {
    /// Whether the error stems from invalid input, as opposed to a failure of
    /// the analysis itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Csv { .. }
                | Error::MissingColumn { .. }
                | Error::NonPositiveValue { .. }
                | Error::BadNumber { .. }
                | Error::UnknownMode { .. }
                | Error::BadDate { .. }
                | Error::YearOutOfRange { .. }
                | Error::InconsistentDates { .. }
                | Error::ConfigMismatch(_)
                | Error::InvalidSpec(_)
                | Error::EmptyDataset
                | Error::NonPositiveBandwidth(_)
                | Error::BadKappa(_)
                | Error::BadSpec(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
