use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the audit engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("non-numeric {role} value {value:?} in column {column:?} at row {row}")]
    NonNumeric {
        role: &'static str,
        column: String,
        row: usize,
        value: String,
    },

    #[error("missing {role} value in column {column:?} at row {row}")]
    MissingValue {
        role: &'static str,
        column: String,
        row: usize,
    },

    #[error("label value {value} in column {column:?} at row {row} is not 0 or 1")]
    NonBinaryLabel {
        column: String,
        row: usize,
        value: f64,
    },

    #[error("unknown column {0:?} in schema")]
    UnknownColumn(String),

    #[error("column {0:?} has no role in schema")]
    UnassignedColumn(String),

    #[error("unknown protected attribute {0:?}")]
    UnknownAttribute(String),

    #[error("unknown group {0:?}")]
    UnknownGroup(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank-deficient design: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("stratification impossible: {0}")]
    Stratification(String),

    #[error("undefined cells: {0}")]
    UndefinedCells(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("label {label}: {source}")]
    Label {
        label: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep point with knob {knob}: {source}")]
    Knob {
        knob: f64,
        #[source]
        source: Box<Error>,
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

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// Stable machine-readable name of the error variant; wrapped errors
    /// report the kind of their source.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::NonNumeric { .. } => "non_numeric",
            Error::MissingValue { .. } => "missing_value",
            Error::NonBinaryLabel { .. } => "non_binary_label",
            Error::UnknownColumn(_) => "unknown_column",
            Error::UnassignedColumn(_) => "unassigned_column",
            Error::UnknownAttribute(_) => "unknown_attribute",
            Error::UnknownGroup(_) => "unknown_group",
            Error::InvalidConfig(_) => "invalid_config",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Stratification(_) => "stratification",
            Error::UndefinedCells(_) => "undefined_cells",
            Error::Insufficient(_) => "insufficient_data",
            Error::Label { source, .. } | Error::Knob { source, .. } => source.kind(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
