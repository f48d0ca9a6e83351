//! CLI-level errors.
//!
//! Ingestion problems get their own variants so each failure mode described
//! in the interface contract (missing file, missing column, grid gap,
//! duplicate stamp, per-row parse failure) is distinguishable both by message
//! and by machine-readable kind.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input file not found: {path}")]
    MissingFile { path: String },

    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("column {name:?} not found in the CSV header")]
    MissingColumn { name: String },

    #[error("row {row}: malformed CSV record: {detail}")]
    MalformedRecord { row: usize, detail: String },

    #[error("row {row}: cannot parse {field} value {text:?}")]
    RowParse {
        row: usize,
        field: &'static str,
        text: String,
    },

    #[error("row {row}: expected a {expected} date, got {got:?}")]
    WrongGranularity {
        row: usize,
        expected: &'static str,
        got: String,
    },

    #[error("duplicate timestamp {timestamp} at row {row}")]
    Duplicate { timestamp: String, row: usize },

    #[error("row {row}: timestamp {next} is earlier than {prev}")]
    OutOfOrder {
        row: usize,
        prev: String,
        next: String,
    },

    #[error("gap in the {granularity} grid: missing {missing}")]
    Gap {
        granularity: &'static str,
        missing: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] rbdm::Error),

    #[error("could not write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("could not serialize {what}: {detail}")]
    Serialize { what: &'static str, detail: String },
}

impl CliError {
    /// Stable machine-readable identifier for the error record printed on
    /// failure.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::MissingFile { .. } => "missing-file",
            CliError::Io { .. } => "io",
            CliError::MissingColumn { .. } => "missing-column",
            CliError::MalformedRecord { .. } => "malformed-record",
            CliError::RowParse { .. } => "row-parse",
            CliError::WrongGranularity { .. } => "wrong-granularity",
            CliError::Duplicate { .. } => "duplicate-timestamp",
            CliError::OutOfOrder { .. } => "out-of-order",
            CliError::Gap { .. } => "grid-gap",
            CliError::Config(_) => "config",
            CliError::Model(_) => "model",
            CliError::Write { .. } => "write",
            CliError::Serialize { .. } => "serialize",
        }
    }
}
