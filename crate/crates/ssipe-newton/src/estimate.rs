use mrp_core::{invert, FiniteMrp, Mat, MrpError, StateDistribution, TransitionSample, TransitionSampler, Vector};
use rand::Rng;
use thiserror::Error;

pub const RESYNC_INTERVAL: u64 = 1000;
pub const RESYNC_TOLERANCE: f64 = 1e-6;
const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("rank-one denominator {0:e} is degenerate; estimate is corrupted")]
    DegenerateDenominator(f64),
    #[error(transparent)]
    Model(#[from] MrpError),
}

/// Running empirical process (P̂, R̂, n_s) with M̂ = (Id − γP̂)⁻¹ maintained by
/// rank-one corrections instead of re-inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessEstimate {
    pub p_hat: Mat,
    pub r_hat: Vector,
    pub counts: Vec<u64>,
    pub m_hat: Mat,
    pub total_steps: u64,
    pub gamma: f64,
    /// Number of times drift forced a direct re-inversion.
    pub resyncs: u64,
}

impl ProcessEstimate {
    /// P̂ = R̂ = 0, M̂ = Id.
    pub fn new(states: usize, gamma: f64) -> Self {
        Self {
            p_hat: Mat::zeros(states, states),
            r_hat: Vector::zeros(states),
            counts: vec![0; states],
            m_hat: Mat::identity(states, states),
            total_steps: 0,
            gamma,
            resyncs: 0,
        }
    }

    /// Estimate with given P̂, R̂, counts; M̂ by direct inversion.
    pub fn from_parts(p_hat: Mat, r_hat: Vector, counts: Vec<u64>, gamma: f64) -> Result<Self, EstimateError> {
        let n = p_hat.nrows();
        let m_hat = invert(&(Mat::identity(n, n) - &p_hat * gamma))?;
        let total_steps = counts.iter().sum();
        Ok(Self { p_hat, r_hat, counts, m_hat, total_steps, gamma, resyncs: 0 })
    }

    pub fn num_states(&self) -> usize {
        self.counts.len()
    }

    /// V̂ = M̂R̂.
    pub fn v_hat(&self) -> Vector {
        &self.m_hat * &self.r_hat
    }

    /// max |M̂(Id − γP̂) − Id|.
    pub fn consistency_residual(&self) -> f64 {
        let n = self.num_states();
        (&self.m_hat * (Mat::identity(n, n) - &self.p_hat * self.gamma) - Mat::identity(n, n)).amax()
    }

    /// Recomputes M̂ by direct inversion if it drifted; returns whether it did.
    pub fn resync_if_drifted(&mut self) -> Result<bool, EstimateError> {
        let n = self.num_states();
        let direct = invert(&(Mat::identity(n, n) - &self.p_hat * self.gamma))?;
        let drift = (&direct - &self.m_hat).amax();
        if drift > RESYNC_TOLERANCE {
            log::warn!("SSIPE drift {drift:e} after {} steps; re-synchronizing M-hat", self.total_steps);
            self.m_hat = direct;
            self.resyncs += 1;
            return Ok(true);
        }
        Ok(false)
    }
}

/// δM = (1/n)M̂_{·s}(e_sᵀ + γM̂_{s'·} − M̂_{s·}) / (1 − (1/n)(γM̂_{s's} − M̂_{ss} + 1)),
/// with n = n_s counting this observation.
pub fn ssipe_delta_m(est: &ProcessEstimate, t: &TransitionSample) -> Result<Mat, EstimateError> {
    let s = t.from_state;
    let n = (est.counts[s] + 1) as f64;
    let g = t.continuation(est.gamma);
    let m = &est.m_hat;
    let mut row = -m.row(s).transpose();
    row[s] += 1.0;
    let mut diag_term = 1.0 - m[(s, s)];
    if g != 0.0 {
        row.axpy(g, &m.row(t.to_state).transpose(), 1.0);
        diag_term += g * m[(t.to_state, s)];
    }
    let denom = 1.0 - diag_term / n;
    if denom.abs() <= DENOMINATOR_FLOOR {
        return Err(EstimateError::DegenerateDenominator(denom));
    }
    Ok(m.column(s) * row.transpose() * (1.0 / (n * denom)))
}

/// δV_{s₁} = (1/n)(r + γV̂_{s'} − V̂_s)M̂_{s₁s}, the leading-order value correction.
pub fn ssipe_delta_v(est: &ProcessEstimate, t: &TransitionSample) -> Vector {
    let s = t.from_state;
    let n = (est.counts[s] + 1) as f64;
    let v = est.v_hat();
    let g = t.continuation(est.gamma);
    let next = if g == 0.0 { 0.0 } else { g * v[t.to_state] };
    let gap = t.reward + next - v[s];
    est.m_hat.column(s) * (gap / n)
}

/// Counts the observation, averages it into P̂ and R̂, and corrects M̂ by the rank-one update.
pub fn observe(est: &mut ProcessEstimate, t: &TransitionSample) -> Result<(), EstimateError> {
    let delta = ssipe_delta_m(est, t)?;
    let s = t.from_state;
    est.counts[s] += 1;
    let w = 1.0 / est.counts[s] as f64;
    est.p_hat.row_mut(s).scale_mut(1.0 - w);
    if !t.terminal {
        est.p_hat[(s, t.to_state)] += w;
    }
    est.r_hat[s] += w * (t.reward - est.r_hat[s]);
    est.m_hat += delta;
    est.total_steps += 1;
    if est.total_steps % RESYNC_INTERVAL == 0 {
        est.resync_if_drifted()?;
    }
    Ok(())
}

/// Outcome of one seeded coverage trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub trial_id: u64,
    pub t: u64,
    pub tv_error_m: f64,
    pub rho_error_v: f64,
    pub m_bound: f64,
    pub v_bound: f64,
}

impl TrialResult {
    pub fn within_m(&self) -> bool {
        self.tv_error_m <= self.m_bound
    }
    pub fn within_v(&self) -> bool {
        self.rho_error_v <= self.v_bound
    }
    pub fn within_bound(&self) -> bool {
        self.within_m() && self.within_v()
    }
}

/// Observes `t` i.i.d. transitions (s ∼ ρ) and scores M̂, V̂ against the exact
/// process, next to the high-probability bounds at confidence 1 − δ.
pub fn ssipe_trial<R: Rng + ?Sized>(
    mrp: &FiniteMrp,
    rho: &StateDistribution,
    steps: u64,
    delta: f64,
    trial_id: u64,
    rng: &mut R,
) -> Result<TrialResult, EstimateError> {
    let sampler = TransitionSampler::new(mrp, rho);
    let mut est = ProcessEstimate::new(mrp.num_states(), mrp.discount());
    for _ in 0..steps {
        observe(&mut est, &sampler.sample(rng))?;
    }
    let m_star = mrp_core::successor_exact(mrp)?;
    let v_star = &m_star * mrp.reward_mean();
    let tv_error_m = mrp_core::tv_norm(&est.m_hat, &m_star, rho);
    let rho_error_v = rho.weights().dot(&(est.v_hat() - v_star).abs());
    let (m_bound, v_bound) = crate::bounds::thm16_bound(
        mrp.num_states(),
        mrp.num_edges(),
        mrp.discount(),
        mrp.reward_bound(),
        steps,
        delta,
    );
    Ok(TrialResult { trial_id, t: steps, tv_error_m, rho_error_v, m_bound, v_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_observation() {
        let mut est = ProcessEstimate::new(2, 0.5);
        let t = TransitionSample::new(0, 1, 1.0);
        let d = ssipe_delta_m(&est, &t).unwrap();
        assert!((d - Mat::from_row_slice(2, 2, &[0.0, 0.5, 0.0, 0.0])).amax() < 1e-15);
        observe(&mut est, &t).unwrap();
        assert_eq!(est.p_hat, Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        // P̂² = 0 so (Id − γP̂)⁻¹ = Id + γP̂
        assert!((&est.m_hat - Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).amax() < 1e-15);
        assert_eq!(est.r_hat[0], 1.0);
    }

    #[test]
    fn repeated_deterministic_edge_is_constant() {
        let mut est = ProcessEstimate::new(3, 0.9);
        let t = TransitionSample::new(1, 2, 0.0);
        observe(&mut est, &t).unwrap();
        let after_first = est.clone();
        for _ in 0..50 {
            assert!(ssipe_delta_m(&est, &t).unwrap().amax() < 1e-15);
            observe(&mut est, &t).unwrap();
        }
        assert!((&est.m_hat - &after_first.m_hat).amax() < 1e-14);
        assert_eq!(est.p_hat, after_first.p_hat);
    }

    #[test]
    fn delta_v_zero_when_gap_is_zero() {
        let mut est = ProcessEstimate::new(2, 0.5);
        let t = TransitionSample::new(0, 1, 1.0);
        for _ in 0..3 {
            observe(&mut est, &t).unwrap();
        }
        assert!(ssipe_delta_v(&est, &t).amax() < 1e-15);
    }

    #[test]
    fn identity_model_reduces_to_scaled_td0() {
        let mut est = ProcessEstimate::new(3, 0.7);
        est.r_hat = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        est.counts = vec![3, 0, 0];
        let t = TransitionSample::new(0, 2, 0.5);
        let dv = ssipe_delta_v(&est, &t);
        let gap = 0.5 + 0.7 * 3.0 - 1.0;
        assert!((dv[0] - gap / 4.0).abs() < 1e-15);
        assert_eq!((dv[1], dv[2]), (0.0, 0.0));
    }

    #[test]
    fn terminal_observations_keep_invariant() {
        let mut est = ProcessEstimate::new(2, 0.9);
        for k in 0..20 {
            let t = if k % 3 == 0 { TransitionSample::terminal(0, 1.0) } else { TransitionSample::new(0, 1, 1.0) };
            observe(&mut est, &t).unwrap();
            observe(&mut est, &TransitionSample::new(1, 0, 0.0)).unwrap();
            assert!(est.consistency_residual() < 1e-12);
        }
        assert!(est.p_hat.row(0).sum() < 1.0);
    }
}
