use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative probability at (x={x}, y1={y1}, y2={y2})")]
    NegativeProbability { x: usize, y1: usize, y2: usize },
    #[error("row x={x} sums to {sum}, expected 1")]
    RowNotNormalized { x: usize, sum: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("size {requested} exceeds cap {cap}")]
    SizeCapExceeded { requested: u128, cap: u128 },
    #[error("input x={x} is not mapped to a single output pair")]
    NotDeterministic { x: usize },
    #[error("partition covers {got} elements but the graph side has {expected}")]
    SideMismatch { expected: usize, got: usize },
    #[error("part index {part} out of range for {parts} parts")]
    BadPartIndex { part: usize, parts: usize },
    #[error("enumeration of {requested} candidates exceeds cap {cap}")]
    EnumerationCapExceeded { requested: u128, cap: u128 },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex stopped after {0} pivots")]
    IterationLimit(usize),
    #[error("solution invariant violated: {0}")]
    InvariantViolation(String),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SizeCapExceeded { .. } | Error::EnumerationCapExceeded { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
