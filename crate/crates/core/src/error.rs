use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution {0} is below the minimum of {1}")]
    Resolution(usize, usize),
    #[error("torus modulus must have positive imaginary part, got {0}")]
    Modulus(f64),
    #[error("bundle kind `{bundle}` does not live over base kind `{base}`")]
    KindMismatch { base: String, bundle: String },
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("reference metric is not positive definite at base point {0}")]
    NotPositive(usize),
    #[error("metric is not Hermitian: {0}")]
    NotHermitian(String),
    #[error("strong pseudo-convexity lost at step {step}: min vertical coefficient {min}")]
    F4Lost { step: usize, min: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
