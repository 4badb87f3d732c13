use mrp_core::{FiniteMrp, Mat};
use nalgebra::Complex;
use rand::Rng;

use crate::error::{DynamicsError, Result};
use crate::spectral::{decompose, CMat};

type C = Complex<f64>;

const REAL_TOL: f64 = 1e-12;
const SCALAR_BLOW_UP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BnScalarOutcome {
    Finite(C),
    BlowUp { time: f64 },
}

impl BnScalarOutcome {
    pub fn value(self) -> Option<C> {
        match self {
            BnScalarOutcome::Finite(z) => Some(z),
            BnScalarOutcome::BlowUp { .. } => None,
        }
    }
}

/// Blow-up time of λ' = −λ + λ², if any. Writing μ = 1/λ gives μ' = μ − 1,
/// μ_t = 1 + e^t(μ₀ − 1), which reaches 0 iff μ₀ is real and in (0, 1),
/// at t = log(1/(1 − μ₀)).
pub fn bn_diverges(lambda0: C) -> Option<f64> {
    if lambda0 == C::new(0.0, 0.0) {
        return None;
    }
    let mu = lambda0.inv();
    let real = mu.im.abs() <= REAL_TOL * mu.norm().max(1.0);
    (real && mu.re > 0.0 && mu.re < 1.0).then(|| (1.0 / (1.0 - mu.re)).ln())
}

/// Closed-form solution of the error-eigenvalue ODE λ' = −λ + λ² at time t.
pub fn bn_error_ode_check(lambda0: C, t: f64) -> BnScalarOutcome {
    if let Some(time) = bn_diverges(lambda0).filter(|&time| time <= t) {
        return BnScalarOutcome::BlowUp { time };
    }
    if lambda0 == C::new(0.0, 0.0) {
        return BnScalarOutcome::Finite(lambda0);
    }
    let mu = C::new(1.0, 0.0) + (lambda0.inv() - 1.0) * t.exp();
    BnScalarOutcome::Finite(mu.inv())
}

fn rk4_scalar(z: C, h: f64) -> C {
    let f = |x: C| -x + x * x;
    let k1 = f(z);
    let k2 = f(z + k1 * (h / 2.0));
    let k3 = f(z + k2 * (h / 2.0));
    let k4 = f(z + k3 * h);
    z + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

/// RK4 on λ' = −λ + λ² with step halving (local relative error 1e-12),
/// reporting blow-up once |λ| exceeds 1e6.
pub fn integrate_scalar_bn(lambda0: C, t_end: f64, step: f64) -> Result<BnScalarOutcome> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(DynamicsError::InvalidStep(step));
    }
    let (mut z, mut t) = (lambda0, 0.0);
    let mut h = step;
    while t < t_end {
        let h_try = h.min(t_end - t);
        let full = rk4_scalar(z, h_try);
        let two = rk4_scalar(rk4_scalar(z, h_try / 2.0), h_try / 2.0);
        let estimate = (full - two).norm() / 15.0;
        if !(estimate <= 1e-12 * two.norm().max(1.0)) {
            if h_try < step * 1e-12 {
                return Err(DynamicsError::StepUnderflow { time: t, estimate });
            }
            h = h_try / 2.0;
            continue;
        }
        z = two;
        t += h_try;
        if z.norm() > SCALAR_BLOW_UP {
            return Ok(BnScalarOutcome::BlowUp { time: t });
        }
        h = (h * 2.0).min(step);
    }
    Ok(BnScalarOutcome::Finite(z))
}

/// BN-flow error E_t = Id − M_tΔ predicted from E₀ by solving the scalar ODE
/// on each eigenvalue of E₀ (E₀ must be diagonalizable).
pub fn bn_error_predict(e0: &Mat, t: f64) -> Result<Mat> {
    let eig = decompose(e0)?;
    let mut diag = Vec::with_capacity(eig.values.len());
    for &l in &eig.values {
        match bn_error_ode_check(l, t) {
            BnScalarOutcome::Finite(z) => diag.push(z),
            BnScalarOutcome::BlowUp { time } => return Err(DynamicsError::BlowUp { time, norm: f64::INFINITY }),
        }
    }
    let d = CMat::from_diagonal(&diag.into());
    Ok((&eig.right * d * &eig.left).map(|z| z.re))
}

/// Fraction of random initializations M₀ (entries uniform in [−scale, scale])
/// whose BN error E₀ = Id − M₀Δ has an eigenvalue on the divergent half-line.
pub fn divergence_frequency<R: Rng + ?Sized>(mrp: &FiniteMrp, trials: usize, scale: f64, rng: &mut R) -> f64 {
    let n = mrp.num_states();
    let delta = mrp.laplacian();
    let hits = (0..trials)
        .filter(|_| {
            let m0 = Mat::from_fn(n, n, |_, _| rng.random_range(-scale..=scale));
            let e0 = Mat::identity(n, n) - m0 * &delta;
            e0.complex_eigenvalues().iter().any(|&l| bn_diverges(l).is_some())
        })
        .count();
    if trials == 0 {
        0.0
    } else {
        hits as f64 / trials as f64
    }
}
