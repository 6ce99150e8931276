use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),
    #[error("unsupported function kind: {0}")]
    UnsupportedKind(String),
    #[error("block ordering invalid: {0}")]
    OrderingInvalid(String),
    #[error("no block ordering for operator: {0}")]
    NoOrdering(String),
    #[error("degenerate row {0}: zero absolute row sum")]
    DegenerateRow(usize),
    #[error("dense validation refused: m + n = {size} exceeds the desk-scale limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("infeasible stepsize: {0}")]
    InfeasibleStepsize(String),
    #[error("infeasible marginals: {0}")]
    InfeasibleMarginals(String),
    #[error("diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            expected,
            got,
            context,
        });
    }
    Ok(())
}
