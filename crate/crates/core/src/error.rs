use thiserror::Error;

/// Errors raised by the numerical kernels and checkers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("grids do not match")]
    GridMismatch,
    #[error("geometry not supported here: {0}")]
    UnsupportedGeometry(String),
    #[error("negative density value {value} at node {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("density vanishes at node {index}")]
    ZeroDensity { index: usize },
    #[error("density has zero total mass")]
    ZeroMass,
    #[error("operation not available for functional {0}")]
    Unsupported(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("singular tridiagonal system at row {0}")]
    SingularSystem(usize),
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("trajectory diverged at t = {t} (|x| = {norm})")]
    Diverged { t: f64, norm: f64 },
    #[error("velocity undefined: mass moves through a region of vanishing density near node {index}")]
    VelocityUndefined { index: usize },
    #[error("objective increased in proximal step ({before} -> {after})")]
    ObjectiveIncrease { before: f64, after: f64 },
    #[error("mass mismatch: {0}")]
    MassMismatch(String),
    #[error("hypothesis `{name}` violated at node {node} (x = {x}): {detail}")]
    HypothesisViolated {
        name: &'static str,
        node: usize,
        x: f64,
        detail: String,
    },
    #[error("boundary values not negligible: |f(R)| / max|f| = {ratio:e}")]
    BoundaryNotNegligible { ratio: f64 },
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
