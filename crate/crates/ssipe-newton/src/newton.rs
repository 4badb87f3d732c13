//! Bellman-Newton iteration M ← (1+η)M − ηM(Id − γP)M, in three forms:
//! exact with the true kernel, sampled on m̃ (M = m̃ρ̂), and parametric on the
//! density model m (M = Id + mρ̂) with indicator gradients.

use mrp_core::{sup_operator_norm, FiniteMrp, Mat, StateDistribution, TransitionSample, TransitionSampler, Vector};
use rand::Rng;

/// One exact step with the true kernel.
pub fn bn_step_exact(m: &Mat, mrp: &FiniteMrp, eta: f64) -> Mat {
    m * (1.0 + eta) - m * mrp.laplacian() * m * eta
}

/// `steps` exact steps from `m0`.
pub fn bn_iterate_exact(m0: &Mat, mrp: &FiniteMrp, eta: f64, steps: usize) -> Mat {
    (0..steps).fold(m0.clone(), |m, _| bn_step_exact(&m, mrp, eta))
}

/// m̃_{s₁s₂} ← (1+η)m̃_{s₁s₂} − ηm̃_{s₁s}m̃_{ss₂} + ηγm̃_{s₁s}m̃_{s's₂} for every (s₁, s₂).
/// In expectation over s ∼ ρ, s' ∼ P this is m̃ ← (1+η)m̃ − ηm̃(ρ̂ − γρ̂P)m̃.
pub fn bn_step_sampled(mt: &mut Mat, t: &TransitionSample, gamma: f64, eta: f64) {
    let s = t.from_state;
    let g = t.continuation(gamma);
    let col = mt.column(s).into_owned();
    let mut row = mt.row(s).transpose();
    if g != 0.0 {
        row.axpy(-g, &mt.row(t.to_state).transpose(), 1.0);
    }
    *mt *= 1.0 + eta;
    mt.ger(-eta, &col, &row, 1.0);
}

/// Four-entry update of the density model given (s, s') and extra s₁, s₂ ∼ ρ.
/// All reads happen before any write; coinciding entries accumulate.
pub fn bn_step_parametric(m: &mut Mat, t: &TransitionSample, s1: usize, s2: usize, gamma: f64, eta: f64) {
    let s = t.from_state;
    let g = t.continuation(gamma);
    let boot = if g == 0.0 { 0.0 } else { g * m[(t.to_state, s2)] };
    let gap = boot - m[(s, s2)];
    let a = m[(s1, s)];
    if g != 0.0 {
        m[(s, t.to_state)] += eta * g;
        m[(s1, t.to_state)] += eta * g * a;
    }
    m[(s, s2)] += eta * gap;
    m[(s1, s2)] += eta * gap * a;
}

/// Step-size cap η‖m̃‖²_∞ ≤ 1 and a growth alarm at 10× a reference norm.
/// Diagnostic only: it never rescales the iterate.
#[derive(Debug, Clone)]
pub struct BnGuard {
    reference_norm: f64,
    pub capped_steps: u64,
    pub divergence_warnings: u64,
}

impl BnGuard {
    /// `reference_norm` is an estimate of ‖M*‖ in the parameterization being iterated.
    pub fn new(reference_norm: f64) -> Self {
        Self { reference_norm, capped_steps: 0, divergence_warnings: 0 }
    }

    pub fn cap(&mut self, eta: f64, m: &Mat) -> f64 {
        let n = sup_operator_norm(m);
        let limit = if n > 0.0 { 1.0 / (n * n) } else { f64::INFINITY };
        if eta > limit {
            self.capped_steps += 1;
            limit
        } else {
            eta
        }
    }

    /// Returns true (and logs once per crossing) when ‖m‖ exceeds 10× the reference.
    pub fn check(&mut self, m: &Mat) -> bool {
        let n = sup_operator_norm(m);
        let over = !n.is_finite() || n > 10.0 * self.reference_norm;
        if over {
            if self.divergence_warnings == 0 {
                log::warn!("Bellman-Newton iterate norm {n:e} exceeds 10x reference {:e}", self.reference_norm);
            }
            self.divergence_warnings += 1;
        }
        over
    }
}

/// TD on V preconditioned by the density model:
/// V_s += η·gap and V_{s₁} += η·gap·m(s₁,s), averaged over the given s₁ draws.
pub fn preconditioned_td_v(v: &mut Vector, m: &Mat, t: &TransitionSample, s1_samples: &[usize], gamma: f64, eta: f64) {
    let s = t.from_state;
    let g = t.continuation(gamma);
    let next = if g == 0.0 { 0.0 } else { g * v[t.to_state] };
    let gap = t.reward + next - v[s];
    v[s] += eta * gap;
    if s1_samples.is_empty() {
        return;
    }
    let w = eta * gap / s1_samples.len() as f64;
    for &s1 in s1_samples {
        v[s1] += w * m[(s1, s)];
    }
}

/// Outcome of a sampled-BN run at one step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPoint {
    pub eta: f64,
    /// max |M − M*| at the end, or infinity after blow-up
    pub final_error: f64,
    pub diverged: bool,
}

/// Runs the sampled backend from M = Id (m̃ = ρ̂⁻¹) at each constant step size and
/// reports the end error; blow-up is declared once ‖m̃‖ passes 10⁶·‖M*ρ̂⁻¹‖.
pub fn sampled_bn_stability_scan<R: Rng + ?Sized>(
    mrp: &FiniteMrp,
    rho: &StateDistribution,
    etas: &[f64],
    steps: usize,
    rng: &mut R,
) -> mrp_core::Result<Vec<StabilityPoint>> {
    rho.require_positive()?;
    let m_star = mrp_core::successor_exact(mrp)?;
    let inv_rho = Mat::from_diagonal(&rho.weights().map(|w| 1.0 / w));
    let limit = 1e6 * sup_operator_norm(&(&m_star * &inv_rho));
    let sampler = TransitionSampler::new(mrp, rho);
    let mut out = Vec::with_capacity(etas.len());
    for &eta in etas {
        let mut mt = inv_rho.clone();
        let mut diverged = false;
        for _ in 0..steps {
            bn_step_sampled(&mut mt, &sampler.sample(rng), mrp.discount(), eta);
            let n = sup_operator_norm(&mt);
            if !n.is_finite() || n > limit {
                diverged = true;
                break;
            }
        }
        let final_error = if diverged { f64::INFINITY } else { (&mt * rho.diag() - &m_star).amax() };
        out.push(StabilityPoint { eta, final_error, diverged });
    }
    Ok(out)
}
