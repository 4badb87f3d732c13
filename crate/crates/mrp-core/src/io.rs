use serde::{Deserialize, Serialize};

use crate::error::{MrpError, Result};
use crate::model::{FiniteMdp, FiniteMrp, Mat, RewardNoise, Vector};

/// On-disk MRP: `{"states", "gamma", "P", "R", "noise"}`, matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrpFile {
    pub states: usize,
    pub gamma: f64,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    #[serde(default)]
    pub noise: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_kind: Option<String>,
}

/// On-disk MDP: adds `"actions"`, a 3-D `"P"` and an S×A `"R"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpFile {
    pub states: usize,
    pub actions: usize,
    pub gamma: f64,
    #[serde(rename = "P")]
    pub p: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
}

pub fn matrix_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(MrpError::InvalidModel("ragged matrix".into()));
    }
    Ok(Mat::from_fn(n, c, |i, j| rows[i][j]))
}

impl From<&FiniteMrp> for MrpFile {
    fn from(m: &FiniteMrp) -> Self {
        Self {
            states: m.num_states(),
            gamma: m.discount(),
            p: matrix_rows(m.transition()),
            r: m.reward_mean().iter().copied().collect(),
            noise: m.reward_noise().iter().copied().collect(),
            noise_kind: match m.noise_kind() {
                RewardNoise::Gaussian => None,
                RewardNoise::Uniform => Some("uniform".into()),
            },
        }
    }
}

impl TryFrom<MrpFile> for FiniteMrp {
    type Error = MrpError;
    fn try_from(f: MrpFile) -> Result<Self> {
        let p = matrix_from_rows(&f.p)?;
        if p.nrows() != f.states {
            return Err(MrpError::InvalidModel(format!("\"states\" is {} but P has {} rows", f.states, p.nrows())));
        }
        let mrp = FiniteMrp::undiscounted_ok(p, Vector::from_vec(f.r), f.gamma)?;
        let noise = if f.noise.is_empty() { Vector::zeros(f.states) } else { Vector::from_vec(f.noise) };
        let kind = match f.noise_kind.as_deref() {
            None | Some("gaussian") => RewardNoise::Gaussian,
            Some("uniform") => RewardNoise::Uniform,
            Some(other) => return Err(MrpError::InvalidModel(format!("unknown noise kind {other}"))),
        };
        mrp.with_noise(noise, kind)
    }
}

impl From<&FiniteMdp> for MdpFile {
    fn from(m: &FiniteMdp) -> Self {
        Self {
            states: m.num_states(),
            actions: m.num_actions(),
            gamma: m.discount(),
            p: m.to_dense(),
            r: matrix_rows(m.reward_mean()),
        }
    }
}

impl TryFrom<MdpFile> for FiniteMdp {
    type Error = MrpError;
    fn try_from(f: MdpFile) -> Result<Self> {
        if f.p.len() != f.states || f.p.iter().any(|a| a.len() != f.actions) {
            return Err(MrpError::InvalidModel("P must be states×actions×states".into()));
        }
        let r = if f.r.is_empty() { Mat::zeros(f.states, f.actions) } else { matrix_from_rows(&f.r)? };
        FiniteMdp::from_dense(&f.p, r, f.gamma)
    }
}

pub fn mrp_to_json(m: &FiniteMrp) -> String {
    serde_json::to_string_pretty(&MrpFile::from(m)).expect("plain data serializes")
}

pub fn mrp_from_json(text: &str) -> Result<FiniteMrp> {
    let f: MrpFile = serde_json::from_str(text).map_err(|e| MrpError::InvalidModel(e.to_string()))?;
    f.try_into()
}

pub fn mdp_to_json(m: &FiniteMdp) -> String {
    serde_json::to_string_pretty(&MdpFile::from(m)).expect("plain data serializes")
}

pub fn mdp_from_json(text: &str) -> Result<FiniteMdp> {
    let f: MdpFile = serde_json::from_str(text).map_err(|e| MrpError::InvalidModel(e.to_string()))?;
    f.try_into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mrp_round_trip() {
        let p = Mat::from_row_slice(2, 2, &[0.25, 0.75, 1.0, 0.0]);
        let m = FiniteMrp::new(p, Vector::from_vec(vec![1.5, -0.1]), 0.9)
            .unwrap()
            .with_noise(Vector::from_vec(vec![0.1, 0.0]), RewardNoise::Uniform)
            .unwrap();
        let back = mrp_from_json(&mrp_to_json(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn mrp_reads_documented_shape() {
        let text = r#"{"states": 1, "gamma": 0.5, "P": [[1.0]], "R": [1.0], "noise": [0.0]}"#;
        let m = mrp_from_json(text).unwrap();
        assert_eq!(m.num_states(), 1);
        assert!(mrp_from_json(r#"{"states": 2, "gamma": 0.5, "P": [[1.0]], "R": [1.0]}"#).is_err());
    }

    #[test]
    fn mdp_round_trip() {
        let p = vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![0.5, 0.5], vec![0.0, 1.0]]];
        let m = FiniteMdp::from_dense(&p, Mat::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 3.0]), 0.8).unwrap();
        assert_eq!(mdp_from_json(&mdp_to_json(&m)).unwrap(), m);
    }
}
