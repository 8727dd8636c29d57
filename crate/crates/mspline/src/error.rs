//! Application errors and their process exit codes.

use std::path::PathBuf;

use mspline_core::Error as CoreError;

/// Exit status for bad flags or configuration files.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for unreadable or unusable data.
pub const EXIT_DATA: i32 = 3;
/// Exit status for numerical failures (ill-posed systems, degenerate GCV).
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            AppError::Usage(_) => "usage",
            AppError::Data(_) | AppError::Io { .. } => "data",
            AppError::Numerical(_) => "numerical",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "usage" => EXIT_USAGE,
            "data" => EXIT_DATA,
            _ => EXIT_NUMERICAL,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidDesign(_)
            | CoreError::InsufficientData { .. }
            | CoreError::OutOfRange { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::DegenerateScale => AppError::Data(msg),
            CoreError::DerivativeOrder { .. } | CoreError::InvalidParameter(_) | CoreError::InvalidScale(_) => {
                AppError::Usage(msg)
            }
            CoreError::IllPosed
            | CoreError::DegenerateGcv { .. }
            | CoreError::SelectionFailed => AppError::Numerical(msg),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
