use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::ValidationReport;

pub type AppResult<T> = Result<T, AppError>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: row {row}: found {found} columns, expected {expected}", path.display())]
    ColumnCount {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("{}: row {row}, column {col}: `{text}` is not a number", path.display())]
    NotNumeric {
        path: PathBuf,
        row: usize,
        col: usize,
        text: String,
    },
    #[error("{}: {} violation(s), first: {}", report.path, report.violations.len(), report.violations[0])]
    Invalid { report: Box<ValidationReport> },
    #[error("{}: line {line}: {message}", path.display())]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] wavecast_core::Error),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 1 usage/IO, 2 validation or constraint failure, 3 numerical abort.
    pub fn exit_code(&self) -> i32 {
        use wavecast_core::Error as E;
        match self {
            AppError::Io { .. }
            | AppError::Csv { .. }
            | AppError::Config { .. }
            | AppError::Usage(_) => 1,
            AppError::ColumnCount { .. }
            | AppError::NotNumeric { .. }
            | AppError::Invalid { .. }
            | AppError::Schema { .. } => 2,
            AppError::Core(e) => match e {
                E::NonFiniteLoss { .. }
                | E::IllConditioned { .. }
                | E::NonFiniteObjective { .. } => 3,
                _ => 2,
            },
        }
    }
}
