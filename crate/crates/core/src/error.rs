use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("dimension mismatch: {what} ({left} vs {right})")]
    DimensionMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid type: {0}")]
    InvalidType(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("sequence does not have the declared composition")]
    CompositionMismatch,

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("undefined information variance: output {output} has zero marginal but positive mass from input {input}")]
    UndefinedLogRatio { input: usize, output: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("input distribution is not capacity-achieving: I(P,W) = {mutual_info} but C(W) = {capacity}")]
    NotCapacityAchieving { mutual_info: f64, capacity: f64 },

    #[error("zero dispersion: the second-order region is degenerate")]
    ZeroDispersion,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("instance too large for exhaustive treatment: {0}")]
    TooLarge(String),

    #[error("critical rate search failed: {0}")]
    CriticalRate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
