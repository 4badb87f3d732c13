use mrp_core::io::{matrix_from_rows, matrix_rows};
use mrp_core::{FiniteMrp, Mat, MrpError, StateDistribution, Vector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbError {
    #[error("rank must be at least 1")]
    RankZero,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("not a fixed point: update residual {residual:e} above {threshold:e}")]
    NotAFixedPoint { residual: f64, threshold: f64 },
    #[error("transition matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Model(#[from] MrpError),
}

pub type Result<T> = std::result::Result<T, FbError>;

/// Which Bellman equation drives each factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FbVariant {
    pub f_rule: Rule,
    pub b_rule: Rule,
}

impl FbVariant {
    pub const FF: Self = Self { f_rule: Rule::Forward, b_rule: Rule::Forward };
    pub const FB: Self = Self { f_rule: Rule::Forward, b_rule: Rule::Backward };
    pub const BF: Self = Self { f_rule: Rule::Backward, b_rule: Rule::Forward };
    pub const BB: Self = Self { f_rule: Rule::Backward, b_rule: Rule::Backward };
    pub const ALL: [Self; 4] = [Self::FF, Self::FB, Self::BF, Self::BB];

    pub fn name(&self) -> &'static str {
        match (self.f_rule, self.b_rule) {
            (Rule::Forward, Rule::Forward) => "ff",
            (Rule::Forward, Rule::Backward) => "fb",
            (Rule::Backward, Rule::Forward) => "bf",
            (Rule::Backward, Rule::Backward) => "bb",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name.trim_end_matches("-fb").trim_end_matches("-FB"))
    }
}

/// m̃ = FᵀB with F, B of shape r×S, so M = FᵀBρ̂.
#[derive(Debug, Clone, PartialEq)]
pub struct FbModel {
    pub f: Mat,
    pub b: Mat,
    pub rho: StateDistribution,
}

impl FbModel {
    pub fn new(f: Mat, b: Mat, rho: StateDistribution) -> Result<Self> {
        if f.nrows() == 0 || b.nrows() == 0 {
            return Err(FbError::RankZero);
        }
        if f.shape() != b.shape() || f.ncols() != rho.len() {
            return Err(FbError::Shape(format!("F {:?}, B {:?}, rho {}", f.shape(), b.shape(), rho.len())));
        }
        Ok(Self { f, b, rho })
    }

    /// F = B = Id (full rank).
    pub fn identity(rho: StateDistribution) -> Self {
        let n = rho.len();
        Self { f: Mat::identity(n, n), b: Mat::identity(n, n), rho }
    }

    /// Entries i.i.d. N(0, 1/√r).
    pub fn random<R: Rng + ?Sized>(rank: usize, rho: StateDistribution, rng: &mut R) -> Result<Self> {
        if rank == 0 {
            return Err(FbError::RankZero);
        }
        let n = rho.len();
        let normal = Normal::new(0.0, 1.0 / (rank as f64).sqrt()).expect("positive std");
        let f = Mat::from_fn(rank, n, |_, _| normal.sample(rng));
        let b = Mat::from_fn(rank, n, |_, _| normal.sample(rng));
        Self::new(f, b, rho)
    }

    pub fn rank(&self) -> usize {
        self.f.nrows()
    }

    pub fn num_states(&self) -> usize {
        self.f.ncols()
    }

    pub fn m_tilde(&self) -> Mat {
        self.f.transpose() * &self.b
    }

    /// FᵀBρ̂.
    pub fn successor(&self) -> Mat {
        self.m_tilde() * self.rho.diag()
    }

    /// Σ_B = Bρ̂Bᵀ.
    pub fn sigma_b(&self) -> Mat {
        &self.b * self.rho.diag() * self.b.transpose()
    }

    /// Σ_F = Fρ̂Fᵀ.
    pub fn sigma_f(&self) -> Mat {
        &self.f * self.rho.diag() * self.f.transpose()
    }

    /// D_F = E[F(s)(γF(s') − F(s))ᵀ] = −Fρ̂ΔFᵀ.
    pub fn d_f(&self, mrp: &FiniteMrp) -> Mat {
        -(&self.f * self.rho.diag() * mrp.laplacian() * self.f.transpose())
    }

    /// D_B = E[(γB(s') − B(s))B(s)ᵀ] = −BΔᵀρ̂Bᵀ.
    pub fn d_b(&self, mrp: &FiniteMrp) -> Mat {
        -(&self.b * mrp.laplacian().transpose() * self.rho.diag() * self.b.transpose())
    }

    /// D = E[B(s)(γF(s') − F(s))ᵀ] = −Bρ̂ΔFᵀ, used by BN-FB.
    pub fn d_bn(&self, mrp: &FiniteMrp) -> Mat {
        -(&self.b * self.rho.diag() * mrp.laplacian() * self.f.transpose())
    }

    pub fn to_checkpoint(&self) -> FbCheckpoint {
        FbCheckpoint {
            r: self.rank(),
            f: matrix_rows(&self.f),
            b: matrix_rows(&self.b),
            rho: self.rho.weights().iter().copied().collect(),
        }
    }

    pub fn from_checkpoint(c: &FbCheckpoint) -> Result<Self> {
        let f = matrix_from_rows(&c.f).map_err(|e| FbError::Checkpoint(e.to_string()))?;
        let b = matrix_from_rows(&c.b).map_err(|e| FbError::Checkpoint(e.to_string()))?;
        if f.nrows() != c.r {
            return Err(FbError::Checkpoint(format!("r = {} but F has {} rows", c.r, f.nrows())));
        }
        let rho = StateDistribution::new(Vector::from_vec(c.rho.clone()))?;
        Self::new(f, b, rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbCheckpoint {
    pub r: usize,
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use mrp_core::stream_rng;

    #[test]
    fn rank_zero_rejected() {
        let rho = StateDistribution::uniform(3);
        assert_eq!(FbModel::new(Mat::zeros(0, 3), Mat::zeros(0, 3), rho.clone()), Err(FbError::RankZero));
        assert_eq!(FbModel::random(0, rho, &mut stream_rng(0, 0)), Err(FbError::RankZero));
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = FbModel::random(2, StateDistribution::uniform(4), &mut stream_rng(1, 0)).unwrap();
        let json = serde_json::to_string(&m.to_checkpoint()).unwrap();
        assert!(json.contains("\"F\"") && json.contains("\"r\":2"));
        let back = FbModel::from_checkpoint(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn variant_names() {
        for v in FbVariant::ALL {
            assert_eq!(FbVariant::parse(v.name()), Some(v));
        }
        assert_eq!(FbVariant::parse("bf-FB"), Some(FbVariant::BF));
    }
}
