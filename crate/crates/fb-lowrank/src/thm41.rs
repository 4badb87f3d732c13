//! Co-integration of an FB flow and the Bellman-Newton flow dM/dt = η(M − MΔM),
//! η = 2/S, for symmetric P with uniform ρ.

use mrp_core::{FiniteMrp, Mat, StateDistribution};
use serde::Serialize;

use crate::model::{FbError, FbModel, FbVariant, Result};
use crate::updates::fb_exact_update;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Thm41Report {
    pub variant: String,
    pub steps: usize,
    pub dt: f64,
    pub eta: f64,
    /// ‖[Δ, F₀ᵀB₀]‖ at the start
    pub initial_commutator: f64,
    /// max over steps of max|F_tᵀB_tρ̂ − M_t|
    pub max_divergence: f64,
    /// max|F_tᵀB_tρ̂ − M*| at the end
    pub final_error: f64,
}

impl Thm41Report {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_divergence < tol
    }
}

/// Errors unless P is symmetric (within 1e−12).
pub fn thm41_harness(mrp: &FiniteMrp, variant: FbVariant, f0: &Mat, b0: &Mat, steps: usize, dt: f64) -> Result<Thm41Report> {
    let p = mrp.transition();
    let asym = (p - p.transpose()).amax();
    if asym > 1e-12 {
        return Err(FbError::Asymmetric(asym));
    }
    thm41_harness_unchecked(mrp, variant, f0, b0, steps, dt)
}

/// Same co-integration without the symmetry check (negative controls).
pub fn thm41_harness_unchecked(
    mrp: &FiniteMrp,
    variant: FbVariant,
    f0: &Mat,
    b0: &Mat,
    steps: usize,
    dt: f64,
) -> Result<Thm41Report> {
    let n = mrp.num_states();
    let rho = StateDistribution::uniform(n);
    let eta = 2.0 / n as f64;
    let delta = mrp.laplacian();
    let mut model = FbModel::new(f0.clone(), b0.clone(), rho.clone())?;
    let mut m = model.successor();
    let initial_commutator = (&delta * model.m_tilde() - model.m_tilde() * &delta).amax();

    let fb_deriv = |f: &Mat, b: &Mat| {
        let tmp = FbModel { f: f.clone(), b: b.clone(), rho: rho.clone() };
        fb_exact_update(&tmp, mrp, variant)
    };
    let bn_deriv = |m: &Mat| (m - m * &delta * m) * eta;

    let mut max_divergence: f64 = 0.0;
    for _ in 0..steps {
        let (f, b) = (&model.f, &model.b);
        let (k1f, k1b) = fb_deriv(f, b);
        let (k2f, k2b) = fb_deriv(&(f + &k1f * (dt / 2.0)), &(b + &k1b * (dt / 2.0)));
        let (k3f, k3b) = fb_deriv(&(f + &k2f * (dt / 2.0)), &(b + &k2b * (dt / 2.0)));
        let (k4f, k4b) = fb_deriv(&(f + &k3f * dt), &(b + &k3b * dt));
        let nf = f + (k1f + &k2f * 2.0 + &k3f * 2.0 + k4f) * (dt / 6.0);
        let nb = b + (k1b + &k2b * 2.0 + &k3b * 2.0 + k4b) * (dt / 6.0);
        model.f = nf;
        model.b = nb;

        let k1 = bn_deriv(&m);
        let k2 = bn_deriv(&(&m + &k1 * (dt / 2.0)));
        let k3 = bn_deriv(&(&m + &k2 * (dt / 2.0)));
        let k4 = bn_deriv(&(&m + &k3 * dt));
        m += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

        let div = (model.successor() - &m).amax();
        max_divergence = max_divergence.max(if div.is_finite() { div } else { f64::INFINITY });
    }
    let final_error = (model.successor() - mrp_core::successor_exact(mrp)?).amax();
    Ok(Thm41Report { variant: variant.name().to_string(), steps, dt, eta, initial_commutator, max_divergence, final_error })
}
