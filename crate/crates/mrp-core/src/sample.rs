use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{FiniteMrp, RewardNoise, StateDistribution, TransitionSample};

pub type LabRng = ChaCha8Rng;

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Index drawn from cumulative weights; returns `None` when `u` lands past the
/// total mass (the deficit of a substochastic row).
fn draw(cumulative: &[f64], u: f64) -> Option<usize> {
    let i = cumulative.partition_point(|&c| c <= u);
    (i < cumulative.len()).then_some(i)
}

fn cumulate(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    weights
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

fn close_top(cdf: &mut [f64], mut weights: impl DoubleEndedIterator<Item = f64> + ExactSizeIterator) {
    if let Some(top) = weights.rposition(|w| w > 0.0) {
        for c in &mut cdf[top..] {
            *c = f64::INFINITY;
        }
    }
}

/// Draws (s ∼ ρ, s' ∼ P_s·, r) triples or trajectory steps from a fixed process.
#[derive(Debug, Clone)]
pub struct TransitionSampler<'a> {
    mrp: &'a FiniteMrp,
    state_cdf: Vec<f64>,
    row_cdf: Vec<Vec<f64>>,
}

impl<'a> TransitionSampler<'a> {
    pub fn new(mrp: &'a FiniteMrp, rho: &StateDistribution) -> Self {
        let p = mrp.transition();
        let row_cdf = (0..mrp.num_states())
            .map(|s| {
                let mut cdf = cumulate(p.row(s).iter().copied());
                // a row that is stochastic up to rounding must never emit a terminal
                if cdf.last().is_some_and(|&c| c >= 1.0 - 1e-12) {
                    close_top(&mut cdf, p.row(s).iter().copied());
                }
                cdf
            })
            .collect();
        let mut state_cdf = cumulate(rho.weights().iter().copied());
        close_top(&mut state_cdf, rho.weights().iter().copied());
        Self { mrp, state_cdf, row_cdf }
    }

    pub fn mrp(&self) -> &FiniteMrp {
        self.mrp
    }

    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        draw(&self.state_cdf, rng.random::<f64>()).unwrap_or(self.state_cdf.len() - 1)
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> f64 {
        let mean = self.mrp.reward_mean()[s];
        let spread = self.mrp.reward_noise()[s];
        if spread == 0.0 {
            return mean;
        }
        match self.mrp.noise_kind() {
            RewardNoise::Gaussian => mean + Normal::new(0.0, spread).expect("finite std").sample(rng),
            RewardNoise::Uniform => mean + spread * (2.0 * rng.random::<f64>() - 1.0),
        }
    }

    /// One step from a given state.
    pub fn step<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> TransitionSample {
        let next = draw(&self.row_cdf[s], rng.random::<f64>());
        let reward = self.sample_reward(s, rng);
        match next {
            Some(t) => TransitionSample::new(s, t, reward),
            None => TransitionSample::terminal(s, reward),
        }
    }

    /// i.i.d. observation: s ∼ ρ, then one step.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TransitionSample {
        let s = self.sample_state(rng);
        self.step(s, rng)
    }
}

/// Convenience wrapper for a single draw.
pub fn sample_transition<R: Rng + ?Sized>(mrp: &FiniteMrp, rho: &StateDistribution, rng: &mut R) -> TransitionSample {
    TransitionSampler::new(mrp, rho).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Mat, Vector};

    #[test]
    fn deterministic_successor() {
        let p = Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let mrp = FiniteMrp::new(p, Vector::from_vec(vec![1.0, 2.0, 3.0]), 0.9).unwrap();
        let sampler = TransitionSampler::new(&mrp, &StateDistribution::uniform(3));
        let mut rng = stream_rng(7, 0);
        for _ in 0..100 {
            let t = sampler.sample(&mut rng);
            assert_eq!(t.to_state, (t.from_state + 1) % 3);
            assert_eq!(t.reward, (t.from_state + 1) as f64);
            assert!(!t.terminal);
        }
    }

    #[test]
    fn empirical_rho_within_binomial_band() {
        let mrp = FiniteMrp::new(Mat::from_element(2, 2, 0.5), Vector::zeros(2), 0.5).unwrap();
        let sampler = TransitionSampler::new(&mrp, &StateDistribution::uniform(2));
        let mut rng = stream_rng(11, 3);
        let n = 1_000_000;
        let zeros = (0..n).filter(|_| sampler.sample(&mut rng).from_state == 0).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((zeros - 0.5 * n as f64).abs() < 3.0 * sigma);
    }

    #[test]
    fn substochastic_rows_emit_terminal() {
        let p = Mat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let mrp = FiniteMrp::new(p, Vector::zeros(2), 0.5).unwrap();
        let sampler = TransitionSampler::new(&mrp, &StateDistribution::uniform(2));
        let mut rng = stream_rng(1, 1);
        assert!(sampler.step(0, &mut rng).terminal);
        assert_eq!(sampler.step(1, &mut rng).to_state, 0);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map({ let mut r = stream_rng(5, 0); move |_| r.random() }).collect();
        let b: Vec<u64> = (0..4).map({ let mut r = stream_rng(5, 0); move |_| r.random() }).collect();
        let c: Vec<u64> = (0..4).map({ let mut r = stream_rng(5, 1); move |_| r.random() }).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
