use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the audit engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected \"OAT1\", found {found:?}")]
    BadMagic { found: Vec<u8> },

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("missing manifest key `{key}` in {path}")]
    MissingKey { path: PathBuf, key: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("row {0} has zero norm")]
    ZeroRow(usize),

    #[error("zero vector in {0}")]
    ZeroVector(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge: residual {residual:e} exceeds {tolerance:e}")]
    NotConverged { residual: f64, tolerance: f64 },

    #[error("bridge error: {0}")]
    Bridge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn out_of_range(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Error::OutOfRange {
            name: name.into(),
            value,
            lo,
            hi,
        }
    }

    pub(crate) fn dim(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}

/// Checks that `value` is a probability in `[0, 1]`.
pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::out_of_range(name, value, 0.0, 1.0))
    }
}
