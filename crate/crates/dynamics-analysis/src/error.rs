use mrp_core::MrpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("flow blew up at t = {time} (‖M‖∞ = {norm:e})")]
    BlowUp { time: f64, norm: f64 },
    #[error("step-halving could not meet tolerance at t = {time} (estimate {estimate:e})")]
    StepUnderflow { time: f64, estimate: f64 },
    #[error("matrix is not numerically diagonalizable (eigenvector condition number {condition:e})")]
    NonDiagonalizable { condition: f64 },
    #[error("{0} has no linear spectral predictor")]
    NoPredictor(&'static str),
    #[error("rate fit needs at least {need} points in the small-error regime, got {have}")]
    InsufficientData { have: usize, need: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Model(#[from] MrpError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;
