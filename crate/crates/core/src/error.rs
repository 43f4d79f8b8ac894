use thiserror::Error;

/// Every failure the library can report.
///
/// `name()` gives a stable machine-readable tag used on the CLI diagnostics stream.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular matrix (pivot {pivot} at row {row})")]
    SingularMatrix { row: usize, pivot: f64 },

    #[error("Newton loop did not converge in {iterations} iterations (last update norm {last_norm:e})")]
    NewtonDivergence { iterations: usize, last_norm: f64 },

    #[error("penalty fixed-point iteration did not converge in {iterations} iterations (last change {last_change:e} N)")]
    FixedPointDivergence { iterations: usize, last_change: f64 },

    #[error("saddle-point system is singular (Schur complement {schur:e})")]
    SingularSaddleSystem { schur: f64 },

    #[error("Schwarz iteration hit {iterations} iterations on interval {interval} without converging (eps_abs {eps_abs:e}, eps_rel {eps_rel:e})")]
    MaxIterationsExceeded {
        interval: usize,
        iterations: usize,
        eps_abs: f64,
        eps_rel: f64,
    },

    #[error("contact status flipped {flips} times on interval {interval}")]
    StatusOscillation { interval: usize, flips: usize },

    #[error("query time {t:e} outside history [{start:e}, {end:e}]")]
    OutOfInterval { t: f64, start: f64, end: f64 },

    #[error("degenerate interface: {0}")]
    DegenerateInterface(String),

    #[error("reference series has zero norm")]
    ZeroReferenceNorm,

    #[error("non-positive error value {0:e} in convergence data")]
    NonPositiveError(f64),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::NewtonDivergence { .. } => "NewtonDivergence",
            Error::FixedPointDivergence { .. } => "FixedPointDivergence",
            Error::SingularSaddleSystem { .. } => "SingularSaddleSystem",
            Error::MaxIterationsExceeded { .. } => "MaxIterationsExceeded",
            Error::StatusOscillation { .. } => "StatusOscillation",
            Error::OutOfInterval { .. } => "OutOfInterval",
            Error::DegenerateInterface(_) => "DegenerateInterface",
            Error::ZeroReferenceNorm => "ZeroReferenceNorm",
            Error::NonPositiveError(_) => "NonPositiveError",
            Error::Parse { .. } => "ParseError",
            Error::Validation(_) => "ValidationError",
            Error::Io(_) => "IoError",
        }
    }

    /// Configuration problems as opposed to solver failures.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Validation(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
