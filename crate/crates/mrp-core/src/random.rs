use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{MrpError, Result};
use crate::model::{FiniteMrp, Mat, Vector};

/// Flat-Dirichlet rows on a random support of size ⌈density·S⌉ (at least 1).
/// Each state keeps an edge to (s+1) mod S so the chain is irreducible.
/// Rewards are uniform in [−1, 1].
pub fn random_mrp<R: Rng + ?Sized>(states: usize, density: f64, gamma: f64, rng: &mut R) -> Result<FiniteMrp> {
    if states == 0 || !(density > 0.0 && density <= 1.0) {
        return Err(MrpError::InvalidModel(format!("random_mrp: bad size {states} or density {density}")));
    }
    let support = ((density * states as f64).ceil() as usize).clamp(1, states);
    let mut p = Mat::zeros(states, states);
    for s in 0..states {
        let ring = (s + 1) % states;
        let mut cols: Vec<usize> = sample_indices(rng, states, support).into_vec();
        if !cols.contains(&ring) {
            cols[0] = ring;
        }
        let draws: Vec<f64> = cols.iter().map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
        let total: f64 = draws.iter().sum();
        for (&c, &d) in cols.iter().zip(&draws) {
            p[(s, c)] = d / total;
        }
        // exact stochasticity up to one rounding in the last entry
        let sum: f64 = p.row(s).sum();
        p[(s, cols[0])] += 1.0 - sum;
    }
    let r = Vector::from_fn(states, |_, _| rng.random_range(-1.0..1.0));
    FiniteMrp::new(p, r, gamma)
}
