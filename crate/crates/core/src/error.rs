use std::io;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The requested computation exceeds a configured size guard.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Min-max rescaling was asked of a column whose values are all equal.
    #[error("cannot normalize objective column {column}: all {rows} values equal {value}")]
    ConstantColumn { column: usize, rows: usize, value: f64 },

    /// A computed quantity fell outside its mathematically admissible range.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("malformed input in {path}: {message}")]
    Format { path: String, message: String },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) | Error::Format { .. } => "validation",
            Error::Resource(_) => "resource",
            Error::ConstantColumn { .. } | Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit status: 2 validation, 3 resource guard, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Format { .. } => 2,
            Error::Resource(_) | Error::ConstantColumn { .. } | Error::Numerical(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
