use thiserror::Error;

/// Errors raised by the mixrate library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixError {
    #[error("derivative order {order} exceeds the family maximum {max}")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("value {value} outside parameter domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("invalid mixing distribution: {0}")]
    InvalidMixing(String),

    #[error("moment sequence too short: need {needed} values, got {got}")]
    InsufficientMoments { needed: usize, got: usize },

    #[error("moment sequence infeasible: det M_{k} = {det} is not positive")]
    Infeasible { k: usize, det: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid cluster: {0}")]
    InvalidCluster(String),

    #[error("empty sample")]
    EmptySample,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("multiplicities sum to {got}, expected {expected}")]
    MultiplicityMismatch { expected: usize, got: usize },

    #[error("quadrature did not converge (achieved error estimate {achieved:e})")]
    Quadrature { achieved: f64 },

    #[error("optimizer produced no feasible evaluation")]
    SearchFailure,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = MixError> = std::result::Result<T, E>;
