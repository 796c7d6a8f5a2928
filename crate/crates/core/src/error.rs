use thiserror::Error;

/// Errors raised by the geometry, flow and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("{0}")]
    Capability(String),

    #[error("injectivity violation: {0}")]
    Injectivity(String),

    #[error("kind mismatch: {0} vs {1}")]
    KindMismatch(String, String),

    #[error("infeasible point: constraint residual {0:e}")]
    Infeasible(f64),

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("injectivity violation at t = {time}: edge {{{i}, {j}}}: {reason}")]
    TrajectoryInjectivity {
        time: f64,
        i: usize,
        j: usize,
        reason: String,
    },

    #[error("numerical blow-up at t = {0}")]
    BlowUp(f64),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
