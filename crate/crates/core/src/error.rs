use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants are grouped by the exit code the CLI maps them to: validation
/// problems with input data, numerical failures, and configuration errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: cannot parse `{value}` in column `{column}`")]
    Parse { row: usize, column: String, value: String },
    #[error("calendar gap: no bar for {missing} (previous bar {previous})")]
    CalendarGap { previous: NaiveDate, missing: NaiveDate },
    #[error("duplicate or unordered date {0}")]
    UnorderedDate(NaiveDate),
    #[error("row {row} ({date}): {reason}")]
    InvalidBar {
        row: usize,
        date: NaiveDate,
        reason: String,
    },
    #[error("zero or negative volume on {0}")]
    ZeroVolume(NaiveDate),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("misaligned series: {0}")]
    Misaligned(String),
    #[error("optimizer did not converge (best log-likelihood {best_loglik})")]
    NonConvergence { best_loglik: f64 },
    #[error("{stage} failed on {date}: {source}")]
    Stage {
        stage: &'static str,
        date: NaiveDate,
        #[source]
        source: Box<Error>,
    },
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Wraps a failure with the pipeline stage and the date it occurred on.
    pub fn at_stage(self, stage: &'static str, date: NaiveDate) -> Self {
        Error::Stage {
            stage,
            date,
            source: Box::new(self),
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Json(_) => 2,
            Error::Io { .. }
            | Error::MissingColumn(_)
            | Error::Parse { .. }
            | Error::CalendarGap { .. }
            | Error::UnorderedDate(_)
            | Error::InvalidBar { .. }
            | Error::ZeroVolume(_)
            | Error::Csv(_)
            | Error::Misaligned(_) => 3,
            Error::Stage { source, .. } => match source.exit_code() {
                2 => 2,
                3 => 3,
                _ => 4,
            },
            _ => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
