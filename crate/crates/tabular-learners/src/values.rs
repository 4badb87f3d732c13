use mrp_core::{invert, FiniteMrp, Mat, MrpError, StateDistribution, TransitionSample, TransitionSampler, Vector};
use rand::Rng;

fn td_gap(v: &Vector, t: &TransitionSample, gamma: f64) -> f64 {
    let g = t.continuation(gamma);
    let next = if g == 0.0 { 0.0 } else { g * v[t.to_state] };
    t.reward + next - v[t.from_state]
}

/// V_s += η(r + γV_{s'} − V_s).
pub fn td0_v(v: &mut Vector, t: &TransitionSample, gamma: f64, eta: f64) {
    let gap = td_gap(v, t, gamma);
    v[t.from_state] += eta * gap;
}

/// Discounted occupation of past states: e ← γλe + 1_{s_t}.
#[derive(Debug, Clone, PartialEq)]
pub struct EligibilityTrace {
    pub trace: Vector,
}

impl EligibilityTrace {
    pub fn new(states: usize) -> Self {
        Self { trace: Vector::zeros(states) }
    }

    pub fn visit(&mut self, s: usize, decay: f64) {
        self.trace *= decay;
        self.trace[s] += 1.0;
    }

    pub fn reset(&mut self) {
        self.trace.fill(0.0);
    }
}

/// Trace update then V += η·e·(r + γV_{s'} − V_s). Expects consecutive samples;
/// the trace is cleared after a terminal step.
pub fn td_lambda_v(v: &mut Vector, e: &mut EligibilityTrace, t: &TransitionSample, gamma: f64, lambda: f64, eta: f64) {
    e.visit(t.from_state, gamma * lambda);
    let gap = td_gap(v, t, gamma);
    v.axpy(eta * gap, &e.trace, 1.0);
    if t.terminal {
        e.reset();
    }
}

/// Relative TD with a reference state: δ = r + γV_{s'} − V_s − γV_{s_rel}.
/// Drawing s_rel ∼ ρ_rel each step gives the distributional version in expectation.
pub fn relative_td_v(v: &mut Vector, t: &TransitionSample, s_rel: usize, gamma: f64, eta: f64) {
    let gap = td_gap(v, t, gamma) - gamma * v[s_rel];
    v[t.from_state] += eta * gap;
}

/// Relative TD subtracting the exact reference average γ·ρ_relᵀV instead of a sampled state.
pub fn relative_td_v_expected(v: &mut Vector, t: &TransitionSample, rho_rel: &StateDistribution, gamma: f64, eta: f64) {
    let gap = td_gap(v, t, gamma) - gamma * rho_rel.weights().dot(v);
    v[t.from_state] += eta * gap;
}

/// (Id − γP + γ𝟙ρ_relᵀ)⁻¹; finite at γ = 1 for ergodic P.
pub fn relative_successor_exact(mrp: &FiniteMrp, rho_rel: &StateDistribution) -> Result<Mat, MrpError> {
    let s = mrp.num_states();
    let gamma = mrp.discount();
    let ones = Vector::from_element(s, 1.0);
    let a = mrp.laplacian() + ones * rho_rel.weights().transpose() * gamma;
    invert(&a)
}

/// Monte Carlo estimate of E[e_t(s̃) | s_t = s] along one long trajectory,
/// with batch-means standard errors.
#[derive(Debug, Clone)]
pub struct TraceEstimate {
    /// `mean[(s, s̃)]`
    pub mean: Mat,
    pub std_error: Mat,
    pub visits: Vec<u64>,
}

pub fn trace_expectation_monte_carlo<R: Rng + ?Sized>(
    sampler: &TransitionSampler<'_>,
    decay: f64,
    steps: usize,
    burn_in: usize,
    batches: usize,
    rng: &mut R,
) -> TraceEstimate {
    let n = sampler.mrp().num_states();
    let mut e = EligibilityTrace::new(n);
    let mut s = sampler.sample_state(rng);
    for _ in 0..burn_in {
        e.visit(s, decay);
        s = advance(sampler, s, rng);
    }
    let per_batch = (steps / batches).max(1);
    let mut batch_means = Vec::with_capacity(batches);
    let mut totals = Mat::zeros(n, n);
    let mut visits = vec![0u64; n];
    for _ in 0..batches {
        let mut sums = Mat::zeros(n, n);
        let mut counts = vec![0u64; n];
        for _ in 0..per_batch {
            e.visit(s, decay);
            let mut row = sums.row_mut(s);
            row += e.trace.transpose();
            counts[s] += 1;
            s = advance(sampler, s, rng);
        }
        totals += &sums;
        for (i, &c) in counts.iter().enumerate() {
            visits[i] += c;
            if c > 0 {
                sums.row_mut(i).scale_mut(1.0 / c as f64);
            }
        }
        batch_means.push(sums);
    }
    let mut mean = totals;
    for (i, &c) in visits.iter().enumerate() {
        if c > 0 {
            mean.row_mut(i).scale_mut(1.0 / c as f64);
        }
    }
    let b = batch_means.len() as f64;
    let mut var = Mat::zeros(n, n);
    for bm in &batch_means {
        let d = bm - &mean;
        var += d.component_mul(&d);
    }
    let std_error = (var / (b * (b - 1.0))).map(f64::sqrt);
    TraceEstimate { mean, std_error, visits }
}

fn advance<R: Rng + ?Sized>(sampler: &TransitionSampler<'_>, s: usize, rng: &mut R) -> usize {
    let t = sampler.step(s, rng);
    if t.terminal {
        sampler.sample_state(rng)
    } else {
        t.to_state
    }
}

/// Burn-in length used for trajectory statistics: 10·⌈1/(1−γ)⌉.
pub fn trajectory_burn_in(gamma: f64) -> usize {
    10 * (1.0 / (1.0 - gamma)).ceil() as usize
}
