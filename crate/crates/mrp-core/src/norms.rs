use crate::error::Result;
use crate::model::{Mat, StateDistribution};

/// sqrt(E_{s∼ρ, s'∼ρ}[(m₁ − m₂)(s,s')²]) with densities mᵢ(s,s') = (Mᵢ)_{ss'}/ρ_{s'}.
pub fn rho_norm(a: &Mat, b: &Mat, rho: &StateDistribution) -> Result<f64> {
    rho.require_positive()?;
    let w = rho.weights();
    let mut total = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let d = a[(i, j)] - b[(i, j)];
            total += w[i] * d * d / w[j];
        }
    }
    Ok(total.sqrt())
}

/// Σ_s ρ_s · sup_A |a_s(A) − b_s(A)|, rows read as measures. Equals
/// ½Σ|a_{ss'} − b_{ss'}| per row when the two rows have equal mass.
pub fn tv_norm(a: &Mat, b: &Mat, rho: &StateDistribution) -> f64 {
    let w = rho.weights();
    (0..a.nrows())
        .map(|i| {
            let d = a.row(i) - b.row(i);
            let pos: f64 = d.iter().filter(|x| **x > 0.0).sum();
            let neg: f64 = -d.iter().filter(|x| **x < 0.0).sum::<f64>();
            w[i] * pos.max(neg)
        })
        .sum()
}

/// Max absolute row sum: the operator norm induced by the sup norm on functions.
pub fn sup_operator_norm(a: &Mat) -> f64 {
    (0..a.nrows()).map(|i| a.row(i).abs().sum()).fold(0.0, f64::max)
}
