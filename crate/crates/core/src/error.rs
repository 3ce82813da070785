use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid polynomial degree {0}")]
    InvalidDegree(usize),

    #[error("pencil sE - A is singular at s = {s}{}", point.map(|p| format!(" (interpolation point {p})")).unwrap_or_default())]
    SingularPencil { s: Complex64, point: Option<usize> },

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("{kind} term of degree {degree} is not present")]
    MissingTerm { kind: &'static str, degree: usize },

    #[error("basis is empty (input has no numerically nonzero columns)")]
    EmptyBasis,

    #[error("requested order {requested} exceeds available rank {available}")]
    RankExceeded { requested: usize, available: usize },

    #[error("size cap exceeded: {what} needs {needed} columns, cap is {cap}")]
    SizeCap {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("QB lift unsupported: {0}")]
    UnsupportedLift(String),

    #[error("zero tangential direction at interpolation point {0}")]
    ZeroDirection(usize),

    #[error("invalid interpolation set: {0}")]
    InvalidInterpolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
