//! TD learners for the successor matrix.
//!
//! Two parameterizations appear here. Full-matrix learners act on M directly
//! (`forward_td_row`, `backward_td_column`, `mixed_td_step`). Sampled learners
//! act on the density model m, with M = Id + m·ρ̂, and touch only the entries
//! whose indicator gradients are nonzero.

use mrp_core::{FiniteMrp, Mat, StateDistribution, TransitionSample};

/// One application of the forward Bellman operator, Id + γPM.
pub fn forward_operator(m: &Mat, mrp: &FiniteMrp) -> Mat {
    let s = m.nrows();
    Mat::identity(s, s) + mrp.transition() * m * mrp.discount()
}

/// One application of the backward Bellman operator, Id + γMP.
pub fn backward_operator(m: &Mat, mrp: &FiniteMrp) -> Mat {
    let s = m.nrows();
    Mat::identity(s, s) + m * mrp.transition() * mrp.discount()
}

fn forward_row_delta(m: &Mat, t: &TransitionSample, gamma: f64) -> Vec<f64> {
    let s = t.from_state;
    let g = t.continuation(gamma);
    (0..m.ncols())
        .map(|j| {
            let boot = if g == 0.0 { 0.0 } else { g * m[(t.to_state, j)] };
            f64::from(u8::from(j == s)) + boot - m[(s, j)]
        })
        .collect()
}

/// Row s of M moves by η(e_s + γM_{s'·} − M_{s·}).
pub fn forward_td_row(m: &mut Mat, t: &TransitionSample, gamma: f64, eta: f64) {
    let delta = forward_row_delta(m, t, gamma);
    for (j, d) in delta.into_iter().enumerate() {
        m[(t.from_state, j)] += eta * d;
    }
}

fn backward_column_delta(m: &Mat, t: &TransitionSample, rho: &StateDistribution, gamma: f64) -> Vec<f64> {
    let (s, s_next) = (t.from_state, t.to_state);
    let ratio = rho.get(s_next) / rho.get(s);
    (0..m.nrows())
        .map(|i| f64::from(u8::from(i == s_next)) + gamma * ratio * m[(i, s)] - m[(i, s_next)])
        .collect()
}

/// Full-matrix learner for the backward equation M = Id + γMP.
///
/// Column s' moves by η(e_{s'} + γ(ρ_{s'}/ρ_s)M_{·s} − M_{·s'}). With ρ
/// stationary its expectation over (s, s') ∼ ρP is (Id + γMP − M)ρ̂. A
/// terminal step carries no s' column and leaves M unchanged.
pub fn backward_td_column(m: &mut Mat, t: &TransitionSample, rho: &StateDistribution, gamma: f64, eta: f64) {
    if t.terminal {
        return;
    }
    let delta = backward_column_delta(m, t, rho, gamma);
    for (i, d) in delta.into_iter().enumerate() {
        m[(i, t.to_state)] += eta * d;
    }
}

/// β·(forward row update) + (1−β)·(backward column update), both evaluated at the current M.
pub fn mixed_td_step(m: &mut Mat, t: &TransitionSample, rho: &StateDistribution, gamma: f64, eta: f64, beta: f64) {
    let fwd = (beta > 0.0).then(|| forward_row_delta(m, t, gamma));
    let bwd = (beta < 1.0 && !t.terminal).then(|| backward_column_delta(m, t, rho, gamma));
    if let Some(d) = fwd {
        for (j, v) in d.into_iter().enumerate() {
            m[(t.from_state, j)] += eta * beta * v;
        }
    }
    if let Some(d) = bwd {
        for (i, v) in d.into_iter().enumerate() {
            m[(i, t.to_state)] += eta * (1.0 - beta) * v;
        }
    }
}

/// Expected `forward_td_row` update over s ∼ ρ, s' ∼ P: ρ̂(Id + γPM − M).
pub fn expected_forward_row(m: &Mat, mrp: &FiniteMrp, rho: &StateDistribution) -> Mat {
    rho.diag() * (forward_operator(m, mrp) - m)
}

/// Expected `backward_td_column` update for stationary ρ: (Id + γMP − M)ρ̂.
pub fn expected_backward_column(m: &Mat, mrp: &FiniteMrp, rho: &StateDistribution) -> Mat {
    (backward_operator(m, mrp) - m) * rho.diag()
}

/// Sampled forward TD on the density model with an independent destination s₂ ∼ ρ:
/// (s,s') += ηγ and (s,s₂) += η(γm(s',s₂) − m(s,s₂)).
pub fn forward_td_sampled(m: &mut Mat, t: &TransitionSample, s2: usize, gamma: f64, eta: f64) {
    let s = t.from_state;
    let g = t.continuation(gamma);
    let boot = if g == 0.0 { 0.0 } else { g * m[(t.to_state, s2)] };
    let gap = boot - m[(s, s2)];
    if g != 0.0 {
        m[(s, t.to_state)] += eta * g;
    }
    m[(s, s2)] += eta * gap;
}

/// Sampled backward TD on the density model with an independent source s₁ ∼ ρ:
/// (s,s') += ηγ, (s₁,s') += ηγm(s₁,s), (s₁,s) −= ηm(s₁,s).
pub fn backward_td_sampled(m: &mut Mat, t: &TransitionSample, s1: usize, gamma: f64, eta: f64) {
    let (s, s_next) = (t.from_state, t.to_state);
    let g = t.continuation(gamma);
    let a = m[(s1, s)];
    if g != 0.0 {
        m[(s, s_next)] += eta * g;
        m[(s1, s_next)] += eta * g * a;
    }
    m[(s1, s)] -= eta * a;
}

/// Horizon-h TD on the density model along `path = [s₀, …, s_h]` with target s_tar ∼ ρ:
/// γ^k at (s₀, s_k) for k = 1..h, plus (s₀,s_tar) += η(γ^h m(s_h,s_tar) − m(s₀,s_tar)).
pub fn multistep_td(m: &mut Mat, path: &[usize], target: usize, gamma: f64, eta: f64) {
    assert!(path.len() >= 2, "multi-step TD needs at least one transition");
    let h = path.len() - 1;
    let s0 = path[0];
    let gh = gamma.powi(h as i32);
    let gap = gh * m[(path[h], target)] - m[(s0, target)];
    let mut gk = 1.0;
    for &sk in &path[1..] {
        gk *= gamma;
        m[(s0, sk)] += eta * gk;
    }
    m[(s0, target)] += eta * gap;
}

/// Density of M − Id with respect to ρ: m = (M − Id)ρ̂⁻¹.
pub fn density_from_successor(m: &Mat, rho: &StateDistribution) -> Mat {
    let s = m.nrows();
    let mut d = m - Mat::identity(s, s);
    for j in 0..s {
        let w = rho.get(j);
        d.column_mut(j).scale_mut(1.0 / w);
    }
    d
}

/// M = Id + m·ρ̂.
pub fn successor_from_density(m: &Mat, rho: &StateDistribution) -> Mat {
    let s = m.nrows();
    Mat::identity(s, s) + m * rho.diag()
}
