use std::fmt;

/// Errors produced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("potential fails midpoint convexity: {0}")]
    NotConvex(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("state is not normalized (norm {0:.3e})")]
    NotNormalized(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("target unreachable at desk scale: {0}")]
    Unreachable(String),

    #[error("outcome {0} has zero probability")]
    ZeroProbability(u64),

    #[error("phase {0} lies outside [0, 1)")]
    PhaseRange(f64),

    #[error("top register of 2^{q} outcomes exceeds the full-distribution cap of 2^{cap_bits}")]
    OutcomeCap { q: u32, cap_bits: u32 },

    #[error("parse error: {0}")]
    Parse(ParseError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Location-tagged parse failure for the text formats in [`crate::io`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse(ParseError {
            line,
            message: message.into(),
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
