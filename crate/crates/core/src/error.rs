use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grading mismatch at entry ({row}, {col}): expected degree {expected}, found {found}")]
    Grading { row: usize, col: usize, expected: i64, found: i64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("parse error at line {line}: {msg}")]
    ParseAt { line: usize, msg: String },

    #[error("{name} requires d >= {min} (got d = {d})")]
    DimensionThreshold { name: String, min: usize, d: usize },

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("certificate does not match operator: {0}")]
    CertificateMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("evaluation on the diagonal x = y")]
    OnDiagonal,

    #[error("integration did not reach tolerance {target:e} (achieved {achieved:e})")]
    Tolerance { target: f64, achieved: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
