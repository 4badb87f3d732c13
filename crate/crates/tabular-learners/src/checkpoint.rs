use mrp_core::io::{matrix_from_rows, matrix_rows};
use mrp_core::{Mat, MrpError, Vector};
use serde::{Deserialize, Serialize};

/// `{"step", "M", "V", "theta"}` for resumable experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerCheckpoint {
    pub step: u64,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<f64>,
}

impl LearnerCheckpoint {
    pub fn capture(step: u64, m: &Mat, v: &Vector, theta: Option<&Vector>) -> Self {
        Self {
            step,
            m: matrix_rows(m),
            v: v.iter().copied().collect(),
            theta: theta.map(|t| t.iter().copied().collect()).unwrap_or_default(),
        }
    }

    pub fn restore(&self) -> Result<(Mat, Vector, Vector), MrpError> {
        Ok((matrix_from_rows(&self.m)?, Vector::from_vec(self.v.clone()), Vector::from_vec(self.theta.clone())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MrpError> {
        serde_json::from_str(text).map_err(|e| MrpError::InvalidModel(e.to_string()))
    }
}
