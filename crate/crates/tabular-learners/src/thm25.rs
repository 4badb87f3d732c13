use mrp_core::{FiniteMrp, Mat, StateDistribution, TransitionSampler, Vector};
use rand::Rng;

use crate::successor::forward_td_row;
use crate::values::td0_v;

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub steps: usize,
    pub max_deviation: f64,
    /// Per-step max |V̂ − M̂R|.
    pub deviations: Vec<f64>,
    /// First step whose deviation exceeded the tolerance, if any.
    pub first_failure: Option<usize>,
}

/// M̂R with the summation order pinned: ascending s₂, left to right.
pub fn pinned_product(m: &Mat, r: &Vector) -> Vector {
    Vector::from_fn(m.nrows(), |s, _| {
        let mut acc = 0.0;
        for s2 in 0..m.ncols() {
            acc += m[(s, s2)] * r[s2];
        }
        acc
    })
}

/// Runs TD on M̂ (full row) and TD(0) on V̂ from zero with the same η and the
/// same transition stream, comparing V̂ to M̂R after every step.
pub fn thm25_harness<R: Rng + ?Sized>(
    mrp: &FiniteMrp,
    steps: usize,
    eta: f64,
    tolerance: f64,
    rng: &mut R,
) -> EquivalenceReport {
    let n = mrp.num_states();
    let sampler = TransitionSampler::new(mrp, &StateDistribution::uniform(n));
    let gamma = mrp.discount();
    let r = mrp.reward_mean();
    let mut m = Mat::zeros(n, n);
    let mut v = Vector::zeros(n);
    let mut deviations = Vec::with_capacity(steps);
    let mut first_failure = None;
    for step in 0..steps {
        let t = sampler.sample(rng);
        forward_td_row(&mut m, &t, gamma, eta);
        td0_v(&mut v, &t, gamma, eta);
        let dev = (pinned_product(&m, r) - &v).amax();
        if dev > tolerance && first_failure.is_none() {
            first_failure = Some(step);
        }
        deviations.push(dev);
    }
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    EquivalenceReport { steps, max_deviation, deviations, first_failure }
}
