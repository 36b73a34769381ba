use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

/// Failures from the simulation and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("no demand days: probability is undefined")]
    NoDemand,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Stable machine-readable kind used in JSON error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::InsufficientHistory(_) => "insufficient-history",
            Error::NoDemand => "no-demand",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while reading rainfall CSV text.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsvError {
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },

    #[error("missing dates {from} through {to}")]
    Gap { from: NaiveDate, to: NaiveDate },

    #[error("line {line}: duplicate date {date}")]
    Duplicate { line: u64, date: NaiveDate },

    #[error("line {line}: negative rainfall {value} on {date}")]
    Negative { line: u64, date: NaiveDate, value: f64 },

    #[error("no rainfall rows")]
    Empty,
}

impl CsvError {
    pub fn kind(&self) -> &'static str {
        match self {
            CsvError::Malformed { .. } => "malformed-row",
            CsvError::Gap { .. } => "gap",
            CsvError::Duplicate { .. } => "duplicate-date",
            CsvError::Negative { .. } => "negative-rainfall",
            CsvError::Empty => "empty",
        }
    }
}

/// Errors from the weather provider client.
#[derive(Debug, Error)]
pub enum FetchError {
    #[error("HTTP failure after {attempts} attempt(s): {message}")]
    Http { attempts: u32, message: String },

    #[error("provider rejected credentials (status {status})")]
    Auth { status: u16 },

    #[error("provider data is missing {missing} day(s), first {first}")]
    IncompleteRange { missing: usize, first: NaiveDate },

    #[error("unexpected provider response: {0}")]
    Schema(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("fixture {path}: {source}")]
    Fixture {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FetchError {
    pub fn kind(&self) -> &'static str {
        match self {
            FetchError::Http { .. } => "http",
            FetchError::Auth { .. } => "auth",
            FetchError::IncompleteRange { .. } => "incomplete-range",
            FetchError::Schema(_) => "schema-mismatch",
            FetchError::InvalidQuery(_) => "invalid-query",
            FetchError::Fixture { .. } => "fixture",
        }
    }
}

/// Errors from the observation record store.
#[derive(Debug, Error)]
pub enum RecordError {
    #[error("a record for {0} already exists")]
    DuplicateDate(NaiveDate),

    #[error("measured water {measured} L exceeds tank volume {volume} L")]
    ExceedsTank { measured: f64, volume: f64 },

    #[error("invalid record: {0}")]
    Invalid(String),

    #[error("record store {path}: {message}")]
    Corrupt { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RecordError {
    pub fn kind(&self) -> &'static str {
        match self {
            RecordError::DuplicateDate(_) => "duplicate-date",
            RecordError::ExceedsTank { .. } => "exceeds-tank",
            RecordError::Invalid(_) => "invalid-input",
            RecordError::Corrupt { .. } => "corrupt-store",
            RecordError::Io(_) => "io",
        }
    }
}
