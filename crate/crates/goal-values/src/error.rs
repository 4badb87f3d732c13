use thiserror::Error;

#[derive(Debug, Error)]
pub enum GoalError {
    #[error("value iteration did not converge after {iterations} sweeps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index {index} out of range ({bound})")]
    OutOfRange { index: usize, bound: usize },
    #[error(transparent)]
    Model(#[from] mrp_core::MrpError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GoalError>;
