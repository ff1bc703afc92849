use thiserror::Error;

/// Errors raised by the library. Each variant maps to one CLI exit category.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible sector L={l}, m1={m1}, m110={m110}")]
    InfeasibleSector { l: usize, m1: usize, m110: usize },

    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("internal contradiction: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::InfeasibleSector { .. } => 4,
            Error::Numerical { .. } | Error::Internal(_) => 3,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
        }
    }

    /// Short machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "usage",
            Error::InfeasibleSector { .. } => "infeasible",
            Error::Numerical { .. } => "numerical",
            Error::Internal(_) => "internal",
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
