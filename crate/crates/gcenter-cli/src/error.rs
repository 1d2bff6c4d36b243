//! Process-level error taxonomy: every failure maps to a distinct exit code
//! and a machine-readable JSON object on stderr.

use std::fmt;

#[derive(Debug)]
pub enum AppError {
    /// Bad flag combinations or invalid parameter values (exit 2).
    Usage(String),
    /// Filesystem problems (exit 3).
    Io(String),
    /// Malformed or schema-violating input data (exit 4).
    Schema(String),
    /// Model or solver failures (exit 5).
    Numerical(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Io(_) => 3,
            AppError::Schema(_) => 4,
            AppError::Numerical(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Usage(_) => "usage",
            AppError::Io(_) => "io",
            AppError::Schema(_) => "schema",
            AppError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Io(m) | AppError::Schema(m) | AppError::Numerical(m) => {
                m
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "message": self.message() }
        })
        .to_string()
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl std::error::Error for AppError {}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> AppError {
        AppError::Io(e.to_string())
    }
}

impl From<gcenter_core::Error> for AppError {
    fn from(e: gcenter_core::Error) -> AppError {
        AppError::Numerical(e.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> AppError {
        AppError::Schema(e.to_string())
    }
}

impl From<csv::Error> for AppError {
    fn from(e: csv::Error) -> AppError {
        AppError::Schema(e.to_string())
    }
}

pub type AppResult<T> = Result<T, AppError>;
