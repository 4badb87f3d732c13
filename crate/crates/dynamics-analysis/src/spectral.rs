use mrp_core::{FiniteMrp, Mat};
use nalgebra::{Complex, DMatrix};

use crate::error::{DynamicsError, Result};
use crate::flows::FlowKind;

pub type CMat = DMatrix<Complex<f64>>;

/// Eigenvector matrices with condition number at or above this are rejected.
pub const MAX_CONDITION: f64 = 1e8;
const CLUSTER_TOL: f64 = 1e-7;
const NULL_TOL: f64 = 1e-6;

/// A = U diag(λ) V with V = U⁻¹: columns of U are right eigenvectors u_i,
/// rows of V are left eigenvectors v_iᵀ normalized so that v_iᵀu_j = δ_ij.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<Complex<f64>>,
    pub right: CMat,
    pub left: CMat,
    pub condition: f64,
}

fn to_complex(a: &Mat) -> CMat {
    a.map(|x| Complex::new(x, 0.0))
}

fn condition_number(u: &CMat) -> f64 {
    let sv = u.clone().svd(false, false).singular_values;
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Eigendecomposition of a real square matrix in complex arithmetic.
/// Eigenvalues come from the real Schur form; each cluster of (numerically)
/// equal eigenvalues gets a basis of the null space of A − λ̄I from an SVD.
pub fn decompose(a: &Mat) -> Result<Eigen> {
    let n = a.nrows();
    let raw: Vec<Complex<f64>> = a.complex_eigenvalues().iter().copied().collect();
    let ac = to_complex(a);
    let scale = a.amax().max(1.0);
    let mut assigned = vec![false; n];
    let mut columns = Vec::with_capacity(n);
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let members: Vec<usize> =
            (i..n).filter(|&j| !assigned[j] && (raw[j] - raw[i]).norm() <= CLUSTER_TOL * raw[i].norm().max(1.0)).collect();
        for &j in &members {
            assigned[j] = true;
        }
        let center = members.iter().map(|&j| raw[j]).sum::<Complex<f64>>() / members.len() as f64;
        let mut shifted = ac.clone();
        for d in 0..n {
            shifted[(d, d)] -= center;
        }
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.expect("requested right singular vectors");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        for &k in order.iter().take(members.len()) {
            // a cluster larger than its eigenspace: defective
            if svd.singular_values[k] > NULL_TOL * scale {
                return Err(DynamicsError::NonDiagonalizable { condition: f64::INFINITY });
            }
            let mut col = vt.row(k).adjoint();
            let norm = col.norm();
            col /= Complex::new(norm, 0.0);
            columns.push(col);
        }
    }
    let right = CMat::from_columns(&columns);
    let condition = condition_number(&right);
    if !(condition < MAX_CONDITION) {
        return Err(DynamicsError::NonDiagonalizable { condition });
    }
    let left = right.clone().try_inverse().ok_or(DynamicsError::NonDiagonalizable { condition })?;
    let projected = &left * &ac * &right;
    let values = (0..n).map(|i| projected[(i, i)]).collect();
    Ok(Eigen { values, right, left, condition })
}

/// Decay rate of the (i, j) dyad u_i v_jᵀ under a linear flow.
pub fn dyad_rate(kind: FlowKind, li: Complex<f64>, lj: Complex<f64>) -> Option<Complex<f64>> {
    match kind {
        FlowKind::Forward => Some(li),
        FlowKind::Backward => Some(lj),
        FlowKind::Mixed => Some((li + lj) / 2.0),
        FlowKind::Bn => None,
    }
}

/// Spectral expansion E₀ = Σ α_ij u_i v_jᵀ of an initial error over the
/// eigenvectors of Δ, with E_t = Σ α_ij e^{−t·rate_ij} u_i v_jᵀ.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub kind: FlowKind,
    pub eigenvalues: Vec<Complex<f64>>,
    pub right_vectors: CMat,
    pub left_vectors: CMat,
    /// α_ij = v_iᵀ E₀ u_j.
    pub coefficients: CMat,
    pub condition: f64,
}

impl SpectralDecomposition {
    pub fn rate(&self, i: usize, j: usize) -> Complex<f64> {
        dyad_rate(self.kind, self.eigenvalues[i], self.eigenvalues[j]).expect("linear flow")
    }

    /// Σ α_ij u_i v_jᵀ.
    pub fn reconstruct(&self) -> Mat {
        (&self.right_vectors * &self.coefficients * &self.left_vectors).map(|z| z.re)
    }

    /// Predicted E_t in the M − Δ⁻¹ convention.
    pub fn predict(&self, t: f64) -> Mat {
        let n = self.eigenvalues.len();
        let mut a = self.coefficients.clone();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] *= (-self.rate(i, j) * t).exp();
            }
        }
        (&self.right_vectors * a * &self.left_vectors).map(|z| z.re)
    }

    /// Real parts of the rates of all n² dyads, row-major in (i, j).
    pub fn dyad_rates(&self) -> Vec<f64> {
        let n = self.eigenvalues.len();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.rate(i, j).re).collect()
    }

    pub fn slowest_rate(&self) -> f64 {
        self.dyad_rates().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Number of dyads whose rate is within `tol` of `rate`.
    pub fn count_modes(&self, rate: f64, tol: f64) -> usize {
        self.dyad_rates().into_iter().filter(|r| (r - rate).abs() < tol).count()
    }

    /// Re (λ_i + λ_j)/2 ≥ min(Re λ_i, Re λ_j) for every pair.
    pub fn mixed_rates_dominate(&self) -> bool {
        let ev = &self.eigenvalues;
        ev.iter().all(|a| ev.iter().all(|b| (a.re + b.re) / 2.0 >= a.re.min(b.re)))
    }
}

/// Decomposes Δ and expands `e0` (in the M − Δ⁻¹ convention) for a linear flow.
pub fn spectral_error(kind: FlowKind, mrp: &FiniteMrp, e0: &Mat) -> Result<SpectralDecomposition> {
    if kind == FlowKind::Bn {
        return Err(DynamicsError::NoPredictor("the Bellman-Newton flow"));
    }
    let n = mrp.num_states();
    if e0.shape() != (n, n) {
        return Err(DynamicsError::Shape(format!("E0 is {:?}, expected {n}x{n}", e0.shape())));
    }
    let eig = decompose(&mrp.laplacian())?;
    let coefficients = &eig.left * to_complex(e0) * &eig.right;
    Ok(SpectralDecomposition {
        kind,
        eigenvalues: eig.values,
        right_vectors: eig.right,
        left_vectors: eig.left,
        coefficients,
        condition: eig.condition,
    })
}
