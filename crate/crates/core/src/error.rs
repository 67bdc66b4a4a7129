use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("design is rank deficient (reciprocal condition number {rcond:.3e})")]
    RankDeficient { rcond: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("need n > p to fit, got n = {n}, p = {p}")]
    TooFewRows { n: usize, p: usize },

    #[error("precision matrix is not positive definite")]
    SingularSystem,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trace has no rows after burn-in")]
    EmptyTrace,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("parse error: {0}")]
    Format(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 usage, 3 IO/parse, 4 data validation,
    /// 5 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 2,
            Error::Io { .. } | Error::Parse { .. } | Error::Format(_) => 3,
            Error::NonFinite(_)
            | Error::RankDeficient { .. }
            | Error::ShapeMismatch(_)
            | Error::TooFewRows { .. } => 4,
            Error::SingularSystem | Error::Domain(_) | Error::EmptyTrace => 5,
        }
    }
}
