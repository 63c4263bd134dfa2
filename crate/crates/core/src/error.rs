use thiserror::Error;

/// Errors raised by the solvers, analyzers and the learning environment.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index out of range: {what} = {value}, allowed {allowed}")]
    OutOfRange {
        what: &'static str,
        value: i64,
        allowed: String,
    },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("degenerate ladder: sum of squared coefficients is {0:e}")]
    DegenerateLadder(f64),

    #[error("degenerate code: {0}")]
    DegenerateCode(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("step size underflow at t = {time:.6e} (h = {step:.3e})")]
    Stiffness { time: f64, step: f64 },

    #[error("reservoir function vanishes at t = {0:.6e}")]
    Singularity(f64),

    #[error("gain undefined: code fidelity {0} is not below 1")]
    UndefinedGain(f64),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
