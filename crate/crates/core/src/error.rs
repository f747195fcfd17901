use thiserror::Error;

/// Errors raised by the library. Operations that only evaluate predicates or
/// closed forms never fail; the variants below cover precondition violations
/// and numerical budgets.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cube family Delta_({k},{l}) is empty")]
    EmptyFamily { k: i32, l: u32 },

    #[error("tolerance {tol:e} unreachable within budget (best error {achieved:e})")]
    ToleranceUnreachable { tol: f64, achieved: f64 },

    #[error("set is not {lambda}-admissible Whitney ({violations} violating cells)")]
    NotWhitney { lambda: f64, violations: usize },

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("functions live on different grids")]
    GridMismatch,

    #[error("discretisation fault: {0}")]
    Discretisation(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
