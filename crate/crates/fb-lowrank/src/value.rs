use mrp_core::Vector;

use crate::model::FbModel;

/// Running estimate of B(R) = E_{s∼ρ}[r_s B(s)].
#[derive(Debug, Clone, PartialEq)]
pub struct RewardEmbedding {
    pub b_of_r: Vector,
    pub count: u64,
}

impl RewardEmbedding {
    pub fn new(rank: usize) -> Self {
        Self { b_of_r: Vector::zeros(rank), count: 0 }
    }

    /// Bρ̂R.
    pub fn exact(model: &FbModel, reward: &Vector) -> Self {
        let b_of_r = &model.b * model.rho.diag() * reward;
        Self { b_of_r, count: 0 }
    }

    /// Folds one reward observed at s ∼ ρ into the running mean.
    pub fn observe(&mut self, model: &FbModel, s: usize, r: f64) {
        self.count += 1;
        let w = 1.0 / self.count as f64;
        let target = model.b.column(s) * r;
        self.b_of_r += (target - &self.b_of_r) * w;
    }
}

/// V(s) = F(s)ᵀB(R).
pub fn fb_value(model: &FbModel, embedding: &RewardEmbedding) -> Vector {
    model.f.transpose() * &embedding.b_of_r
}

/// Accumulates B(R) over a stream of (s, r) pairs and reads out V.
pub fn fb_value_from_stream<I: IntoIterator<Item = (usize, f64)>>(model: &FbModel, stream: I) -> (RewardEmbedding, Vector) {
    let mut e = RewardEmbedding::new(model.rank());
    for (s, r) in stream {
        e.observe(model, s, r);
    }
    let v = fb_value(model, &e);
    (e, v)
}
