//! Dense oracles in the ρ̂^{1/2}-conjugated geometry, where L²(ρ)
//! orthogonality is ordinary orthogonality: A ↦ ρ̂^{1/2}Aρ̂^{−1/2}.

use mrp_core::{FiniteMrp, Mat, StateDistribution, Vector};
use nalgebra::SVD;
use serde::Serialize;

use crate::model::{FbError, FbModel, FbVariant, Result};
use crate::updates::fb_residual;

const RANK_TOL: f64 = 1e-9;
const GAP_ALARM: f64 = 1e-6;

fn sqrt_rho(rho: &StateDistribution) -> (Mat, Mat) {
    let w = rho.weights();
    (Mat::from_diagonal(&w.map(f64::sqrt)), Mat::from_diagonal(&w.map(|x| 1.0 / x.sqrt())))
}

/// ρ̂^{1/2}Aρ̂^{−1/2}.
pub fn conjugate(a: &Mat, rho: &StateDistribution) -> Mat {
    let (s, si) = sqrt_rho(rho);
    s * a * si
}

/// ρ̂^{−1/2}Aρ̂^{1/2}.
pub fn unconjugate(a: &Mat, rho: &StateDistribution) -> Mat {
    let (s, si) = sqrt_rho(rho);
    si * a * s
}

/// Singular triplets sorted by descending value; ties keep index order.
fn sorted_svd(a: &Mat) -> (Vec<f64>, Mat, Mat) {
    assert!(a.iter().all(|x| x.is_finite()), "SVD of a non-finite matrix");
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = Mat::from_columns(&order.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    let vt = Mat::from_rows(&order.iter().map(|&i| vt.row(i)).collect::<Vec<_>>());
    (values, u, vt)
}

/// Singular values of ρ̂^{1/2}Mρ̂^{−1/2}, descending.
pub fn conjugated_singular_values(m: &Mat, rho: &StateDistribution) -> Vec<f64> {
    sorted_svd(&conjugate(m, rho)).0
}

/// Best rank-r approximation of M in the L²(ρ) Hilbert-Schmidt norm.
pub fn truncated_svd_oracle(m: &Mat, rho: &StateDistribution, r: usize) -> Mat {
    let a = conjugate(m, rho);
    let (sv, u, vt) = sorted_svd(&a);
    let mut out = Mat::zeros(a.nrows(), a.ncols());
    for k in 0..r.min(sv.len()) {
        out += u.column(k) * vt.row(k) * sv[k];
    }
    unconjugate(&out, rho)
}

/// Orthogonal projector onto the column space of `x` (relative rank tolerance 1e−9).
pub fn column_projector(x: &Mat) -> Mat {
    let n = x.nrows();
    if x.ncols() == 0 {
        return Mat::zeros(n, n);
    }
    let (sv, u, _) = sorted_svd(x);
    let top = sv.first().copied().unwrap_or(0.0);
    let mut p = Mat::zeros(n, n);
    for (k, &s) in sv.iter().enumerate() {
        if top > 0.0 && s > RANK_TOL * top {
            p += u.column(k) * u.column(k).transpose();
        }
    }
    p
}

pub fn numerical_rank(x: &Mat) -> usize {
    let sv = sorted_svd(x).0;
    let top = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| top > 0.0 && s > RANK_TOL * top).count()
}

/// The two truncated-SVD orthogonality conditions for a candidate X against M, in the
/// conjugated geometry A = ρ̂^{1/2}Mρ̂^{−1/2}, C = ρ̂^{1/2}Xρ̂^{−1/2}:
/// (‖(A − C)Π_row(C)‖, ‖Π_Im(C) A Π_Ker(C)‖), Frobenius norms.
pub fn svd_conditions(m: &Mat, x: &Mat, rho: &StateDistribution) -> [f64; 2] {
    let a = conjugate(m, rho);
    let c = conjugate(x, rho);
    let n = a.nrows();
    let row = column_projector(&c.transpose());
    let im = column_projector(&c);
    let ker = Mat::identity(n, n) - &row;
    [((&a - &c) * &row).norm(), (im * &a * ker).norm()]
}

/// Largest principal angle (radians) between the column spaces of `a` and `b`.
pub fn max_principal_angle(a: &Mat, b: &Mat) -> f64 {
    let pa = column_projector(a);
    let pb = column_projector(b);
    let ra = numerical_rank(a);
    if ra != numerical_rank(b) {
        return std::f64::consts::FRAC_PI_2;
    }
    // sines of the principal angles are the singular values of (I − P_b)P_a
    let n = pa.nrows();
    let s = sorted_svd(&((Mat::identity(n, n) - pb) * pa)).0;
    s.first().copied().unwrap_or(0.0).clamp(0.0, 1.0).asin()
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ClassificationReport {
    pub variant: String,
    pub rank: usize,
    pub fixed_point_residual: f64,
    pub tolerance: f64,
    /// Singular gap σ_r − σ_{r+1} of the conjugated M at the model's rank.
    pub singular_gap: Option<f64>,
    pub tolerance_widened: bool,
    pub svd_residuals: [f64; 2],
    pub svd_holds: bool,
    /// E = (Ker FᵀBρ̂)^⊥: M·E ⊆ E and FᵀBρ̂ = MΠ_E.
    pub stability_residual: f64,
    pub stability_holds: bool,
    /// E = Im FᵀBρ̂: FᵀBρ̂ = Π_E M and M·Ker Π_E ⊆ Ker Π_E.
    pub projection_residual: f64,
    pub projection_holds: bool,
    /// fᵀb and ΠDΠ inverse on H = Im fᵀ, with f = Fρ̂^{1/2}, b = Bρ̂^{1/2}, D = ρ̂^{1/2}Δρ̂^{−1/2}.
    pub weak_inverse_residual: f64,
    pub weak_inverse_holds: bool,
}

/// Checks which fixed-point characterizations a converged model satisfies.
pub fn classify_fixed_point(
    model: &FbModel,
    mrp: &FiniteMrp,
    variant: FbVariant,
    fixed_point_threshold: f64,
    tolerance: f64,
) -> Result<ClassificationReport> {
    let residual = fb_residual(model, mrp, variant);
    if !(residual <= fixed_point_threshold) || !model.f.iter().chain(model.b.iter()).all(|x| x.is_finite()) {
        return Err(FbError::NotAFixedPoint { residual, threshold: fixed_point_threshold });
    }
    let rho = &model.rho;
    let m = mrp_core::successor_exact(mrp)?;
    let x = model.successor();
    let n = m.nrows();
    let id = Mat::identity(n, n);
    let a = conjugate(&m, rho);
    let c = conjugate(&x, rho);
    let rank = numerical_rank(&c);

    let sv = sorted_svd(&a).0;
    let singular_gap = (rank >= 1 && rank < n).then(|| sv[rank - 1] - sv[rank]);
    let widened = singular_gap.is_some_and(|g| g < GAP_ALARM);
    let tol = if widened { tolerance * 10.0 } else { tolerance };

    let svd_residuals = svd_conditions(&m, &x, rho);

    let row = column_projector(&c.transpose());
    let stability_residual = (((&id - &row) * &a * &row).norm()).max((&c - &a * &row).norm());

    let im = column_projector(&c);
    let projection_residual = ((&c - &im * &a).norm()).max((&im * &a * (&id - &im)).norm());

    let (s_half, _) = sqrt_rho(rho);
    let f = &model.f * &s_half;
    let b = &model.b * &s_half;
    let d = conjugate(&mrp.laplacian(), rho);
    let pi = column_projector(&f.transpose());
    let xw = f.transpose() * &b;
    let pdp = &pi * d * &pi;
    let weak_inverse_residual = ((&xw * &pdp - &pi).norm()).max((&pdp * &xw - &pi).norm());

    Ok(ClassificationReport {
        variant: variant.name().to_string(),
        rank,
        fixed_point_residual: residual,
        tolerance: tol,
        singular_gap,
        tolerance_widened: widened,
        svd_residuals,
        svd_holds: svd_residuals[0] < tol && svd_residuals[1] < tol,
        stability_residual,
        stability_holds: stability_residual < tol,
        projection_residual,
        projection_holds: projection_residual < tol,
        weak_inverse_residual,
        weak_inverse_holds: weak_inverse_residual < tol,
    })
}

/// bf fixed point spanning a given subspace E (columns of `basis`): f = AΠ with
/// Π the rectangular projector onto H = ρ̂^{1/2}E, b = (fDfᵀ)⁻¹f.
/// Requires ρ stationary so that fDfᵀ is invertible.
pub fn weak_inverse_fixed_point(basis: &Mat, a: &Mat, mrp: &FiniteMrp, rho: &StateDistribution) -> Result<FbModel> {
    let (s_half, s_inv) = sqrt_rho(rho);
    let h = &s_half * basis;
    let q = h.clone().qr().q();
    let k = numerical_rank(&h);
    if a.shape() != (k, k) {
        return Err(FbError::Shape(format!("A must be {k}x{k}")));
    }
    let q = q.columns(0, k).into_owned();
    let f = a * q.transpose();
    let d = conjugate(&mrp.laplacian(), rho);
    let gram = &f * d * f.transpose();
    let b = mrp_core::invert(&gram)? * &f;
    FbModel::new(f * &s_inv, b * &s_inv, rho.clone())
}

/// (fᵀρ̂(Id − γP)f, (1−γ)E_ρ[f²] + (γ/2)E_{ρP}[(f(s) − f(s'))²]).
pub fn dirichlet_form(mrp: &FiniteMrp, rho: &StateDistribution, f: &Vector) -> (f64, f64) {
    let lhs = f.dot(&(rho.diag() * mrp.laplacian() * f));
    let gamma = mrp.discount();
    let p = mrp.transition();
    let w = rho.weights();
    let mut dirichlet = 0.0;
    for i in 0..f.len() {
        for j in 0..f.len() {
            dirichlet += w[i] * p[(i, j)] * (f[i] - f[j]).powi(2);
        }
    }
    let rhs = (1.0 - gamma) * w.dot(&f.component_mul(f)) + gamma / 2.0 * dirichlet;
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_and_zero_truncations() {
        let rho = StateDistribution::new(Vector::from_vec(vec![0.2, 0.3, 0.5])).unwrap();
        let m = Mat::from_fn(3, 3, |i, j| 1.0 + (i * 3 + j) as f64 * 0.37);
        assert!((truncated_svd_oracle(&m, &rho, 3) - &m).amax() < 1e-12);
        assert_eq!(truncated_svd_oracle(&m, &rho, 0), Mat::zeros(3, 3));
    }

    #[test]
    fn uniform_rho_matches_plain_svd() {
        let rho = StateDistribution::uniform(4);
        let mut m = Mat::from_diagonal(&Vector::from_vec(vec![5.0, 3.0, 1.0, 0.5]));
        m[(0, 1)] = 0.01;
        m[(2, 3)] = -0.02;
        let svd = m.clone().svd(true, true);
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let plain = idx[..2].iter().fold(Mat::zeros(4, 4), |acc, &k| acc + u.column(k) * vt.row(k) * svd.singular_values[k]);
        assert!((truncated_svd_oracle(&m, &rho, 2) - plain).amax() < 1e-12);
    }

    #[test]
    fn truncation_satisfies_svd_conditions() {
        let rho = StateDistribution::new(Vector::from_vec(vec![0.1, 0.2, 0.3, 0.4])).unwrap();
        let m = Mat::from_fn(4, 4, |i, j| ((i * 4 + j) as f64).sin() + f64::from(u8::from(i == j)) * 2.0);
        for r in 0..=4 {
            let x = truncated_svd_oracle(&m, &rho, r);
            let [a, b] = svd_conditions(&m, &x, &rho);
            assert!(a < 1e-10 && b < 1e-10, "r={r}: {a} {b}");
        }
    }

    #[test]
    fn principal_angles() {
        let a = Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = Mat::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        assert!((max_principal_angle(&a, &b) - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!(max_principal_angle(&a, &(a.clone() * 3.0)) < 1e-12);
    }
}
