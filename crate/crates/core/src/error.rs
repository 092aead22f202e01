use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vector/matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The input data cannot support the requested operation.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A factorization or solve failed despite regularization.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A dense expansion or combinatorial construction exceeds its limit.
    #[error("capacity exceeded: {what} ({actual} > {limit})")]
    Capacity {
        what: &'static str,
        limit: usize,
        actual: usize,
    },

    /// File I/O failed.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A dataset or model file is malformed.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
