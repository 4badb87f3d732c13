use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("CSV schema violation: {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] mrp_core::MrpError),
    #[error(transparent)]
    Goal(#[from] goal_values::GoalError),
    #[error(transparent)]
    Dynamics(#[from] dynamics_analysis::DynamicsError),
    #[error(transparent)]
    Fb(#[from] fb_lowrank::FbError),
    #[error(transparent)]
    Estimate(#[from] ssipe_newton::EstimateError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
