use thiserror::Error;

/// Errors raised by the tensor, channel and process-tensor routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown index label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate index label `{0}`")]
    DuplicateLabel(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("negative eigenvalue {0:.3e} below clipping tolerance")]
    NegativeEigenvalue(f64),

    #[error("spectrum does not sum to one (sum = {0})")]
    NotNormalized(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("channel is not completely positive (min Choi eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),

    #[error("channel is not trace preserving (residual {0:.3e})")]
    NotTracePreserving(f64),

    #[error("channel is not a unitary conjugation: {0}")]
    NotUnitary(String),

    #[error("index {index} out of range (max {max})")]
    OutOfRange { index: usize, max: usize },

    #[error("refusing to materialize a {k}-step process tensor (limit {limit})")]
    TooLarge { k: usize, limit: usize },

    #[error("format error in `{field}`: {reason}")]
    Format { field: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
