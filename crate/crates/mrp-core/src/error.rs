use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MrpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("matrix is numerically singular")]
    Singular,
    #[error("path enumeration budget exceeded: {paths} paths > {budget}")]
    EnumerationBudget { paths: f64, budget: f64 },
    #[error("state {0} has zero measure under rho")]
    ZeroMeasureState(usize),
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("distribution is not stationary (L1 residual {0:e})")]
    NotStationary(f64),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("state index {index} out of range for {states} states")]
    StateOutOfRange { index: usize, states: usize },
}

pub type Result<T> = std::result::Result<T, MrpError>;
