use nalgebra::{DMatrix, DVector};

use crate::error::{MrpError, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Dense S×S estimate or oracle of M = (Id − γP)⁻¹.
pub type SuccessorMatrix = DMatrix<f64>;

const ROW_SUM_TOL: f64 = 1e-9;

/// How observed rewards scatter around their mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardNoise {
    /// `noise[s]` is the standard deviation.
    #[default]
    Gaussian,
    /// Uniform on `[R_s - b, R_s + b]` with `b = noise[s]`; rewards stay bounded.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMrp {
    transition: Mat,
    reward_mean: Vector,
    reward_noise: Vector,
    noise_kind: RewardNoise,
    discount: f64,
}

fn check_substochastic_row(row: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for p in row {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(MrpError::InvalidModel(format!("{what}: entry {p} is not a probability")));
        }
        sum += p;
    }
    if sum > 1.0 + ROW_SUM_TOL {
        return Err(MrpError::InvalidModel(format!("{what}: row sums to {sum} > 1")));
    }
    Ok(())
}

impl FiniteMrp {
    /// Discounted process; requires `0 <= gamma < 1`.
    pub fn new(transition: Mat, reward_mean: Vector, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(MrpError::InvalidModel(format!("discount {discount} not in [0, 1)")));
        }
        Self::build(transition, reward_mean, discount)
    }

    /// Same as [`FiniteMrp::new`] but also admits `gamma == 1`, for relative TD.
    pub fn undiscounted_ok(transition: Mat, reward_mean: Vector, discount: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&discount) {
            return Err(MrpError::InvalidModel(format!("discount {discount} not in [0, 1]")));
        }
        Self::build(transition, reward_mean, discount)
    }

    fn build(transition: Mat, reward_mean: Vector, discount: f64) -> Result<Self> {
        let s = transition.nrows();
        if s == 0 || transition.ncols() != s {
            return Err(MrpError::InvalidModel(format!(
                "transition must be square and nonempty, got {}x{}",
                transition.nrows(),
                transition.ncols()
            )));
        }
        if reward_mean.len() != s {
            return Err(MrpError::InvalidModel(format!("reward has length {}, expected {s}", reward_mean.len())));
        }
        for i in 0..s {
            check_substochastic_row(transition.row(i).iter().copied(), &format!("row {i}"))?;
        }
        Ok(Self { transition, reward_mean, reward_noise: Vector::zeros(s), noise_kind: RewardNoise::Gaussian, discount })
    }

    pub fn with_noise(mut self, noise: Vector, kind: RewardNoise) -> Result<Self> {
        if noise.len() != self.num_states() || noise.iter().any(|&x| !(x >= 0.0)) {
            return Err(MrpError::InvalidModel("noise must be a nonnegative length-S vector".into()));
        }
        self.reward_noise = noise;
        self.noise_kind = kind;
        Ok(self)
    }

    pub fn with_rewards(mut self, reward_mean: Vector) -> Result<Self> {
        if reward_mean.len() != self.num_states() {
            return Err(MrpError::InvalidModel("reward length mismatch".into()));
        }
        self.reward_mean = reward_mean;
        Ok(self)
    }

    pub fn with_discount(self, discount: f64) -> Result<Self> {
        let noise = self.reward_noise.clone();
        let kind = self.noise_kind;
        let m = if discount < 1.0 {
            Self::new(self.transition, self.reward_mean, discount)?
        } else {
            Self::undiscounted_ok(self.transition, self.reward_mean, discount)?
        };
        m.with_noise(noise, kind)
    }

    pub fn num_states(&self) -> usize {
        self.transition.nrows()
    }
    pub fn transition(&self) -> &Mat {
        &self.transition
    }
    pub fn reward_mean(&self) -> &Vector {
        &self.reward_mean
    }
    pub fn reward_noise(&self) -> &Vector {
        &self.reward_noise
    }
    pub fn noise_kind(&self) -> RewardNoise {
        self.noise_kind
    }
    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Laplacian Δ = Id − γP.
    pub fn laplacian(&self) -> Mat {
        let s = self.num_states();
        Mat::identity(s, s) - &self.transition * self.discount
    }

    pub fn is_stochastic(&self, tol: f64) -> bool {
        (0..self.num_states()).all(|i| (self.transition.row(i).sum() - 1.0).abs() <= tol)
    }

    /// Number of pairs (s, s') with P_{ss'} > 0.
    pub fn num_edges(&self) -> usize {
        self.transition.iter().filter(|&&p| p > 0.0).count()
    }

    /// Bound on |reward| when noise is uniform; infinite for Gaussian noise with positive spread.
    pub fn reward_bound(&self) -> f64 {
        let spread = |s: usize| match self.noise_kind {
            RewardNoise::Uniform => self.reward_noise[s],
            RewardNoise::Gaussian if self.reward_noise[s] == 0.0 => 0.0,
            RewardNoise::Gaussian => f64::INFINITY,
        };
        (0..self.num_states()).map(|s| self.reward_mean[s].abs() + spread(s)).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (&self.transition - self.transition.transpose()).amax() <= tol
    }
}

/// Finite MDP. Transitions are stored as sparse outcome lists per (s, a) so that
/// large trees stay cheap; rows may be substochastic (mass deficit = termination).
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    num_states: usize,
    num_actions: usize,
    outcomes: Vec<Vec<(usize, f64)>>,
    reward_mean: Mat,
    discount: f64,
}

impl FiniteMdp {
    /// `outcomes[s * A + a]` lists `(s', p)` pairs.
    pub fn from_outcomes(
        num_states: usize,
        num_actions: usize,
        outcomes: Vec<Vec<(usize, f64)>>,
        reward_mean: Mat,
        discount: f64,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(MrpError::InvalidModel("MDP needs at least one state and one action".into()));
        }
        if outcomes.len() != num_states * num_actions {
            return Err(MrpError::InvalidModel("outcome table has wrong length".into()));
        }
        if reward_mean.shape() != (num_states, num_actions) {
            return Err(MrpError::InvalidModel("reward must be S×A".into()));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(MrpError::InvalidModel(format!("discount {discount} not in [0, 1)")));
        }
        let mut merged = Vec::with_capacity(outcomes.len());
        for (idx, row) in outcomes.into_iter().enumerate() {
            let mut row: Vec<(usize, f64)> = row.into_iter().filter(|&(_, p)| p != 0.0).collect();
            if let Some(&(bad, _)) = row.iter().find(|&&(t, _)| t >= num_states) {
                return Err(MrpError::StateOutOfRange { index: bad, states: num_states });
            }
            row.sort_by_key(|&(t, _)| t);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            check_substochastic_row(row.iter().map(|&(_, p)| p), &format!("(s,a) row {idx}"))?;
            merged.push(row);
        }
        Ok(Self { num_states, num_actions, outcomes: merged, reward_mean, discount })
    }

    /// Dense constructor: `p[s][a][s']`.
    pub fn from_dense(p: &[Vec<Vec<f64>>], reward_mean: Mat, discount: f64) -> Result<Self> {
        let s = p.len();
        let a = p.first().map_or(0, |r| r.len());
        let mut outcomes = Vec::with_capacity(s * a);
        for (i, per_action) in p.iter().enumerate() {
            if per_action.len() != a {
                return Err(MrpError::InvalidModel(format!("state {i} has {} actions, expected {a}", per_action.len())));
            }
            for row in per_action {
                if row.len() != s {
                    return Err(MrpError::InvalidModel("transition rows must have length S".into()));
                }
                outcomes.push(row.iter().enumerate().filter(|(_, &p)| p != 0.0).map(|(j, &p)| (j, p)).collect());
            }
        }
        Self::from_outcomes(s, a, outcomes, reward_mean, discount)
    }

    /// Same MDP with γ = 1, for undiscounted horizon analysis.
    pub fn undiscounted(mut self) -> Self {
        self.discount = 1.0;
        self
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
    pub fn discount(&self) -> f64 {
        self.discount
    }
    pub fn reward_mean(&self) -> &Mat {
        &self.reward_mean
    }
    pub fn outcomes(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.outcomes[s * self.num_actions + a]
    }
    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a).iter().find(|&&(t, _)| t == next).map_or(0.0, |&(_, p)| p)
    }

    pub fn to_dense(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_states)
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| {
                        let mut row = vec![0.0; self.num_states];
                        for &(t, p) in self.outcomes(s, a) {
                            row[t] = p;
                        }
                        row
                    })
                    .collect()
            })
            .collect()
    }

    pub fn is_stochastic(&self, tol: f64) -> bool {
        self.outcomes.iter().all(|row| (row.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs() <= tol)
    }

    /// For each state, the (s, a, p) triples that lead into it.
    pub fn predecessors(&self) -> Vec<Vec<(usize, usize, f64)>> {
        let mut pred = vec![Vec::new(); self.num_states];
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                for &(t, p) in self.outcomes(s, a) {
                    pred[t].push((s, a, p));
                }
            }
        }
        pred
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    weights: Vector,
    positive: bool,
}

impl StateDistribution {
    pub fn new(weights: Vector) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(MrpError::InvalidModel("distribution weights must be finite and nonnegative".into()));
        }
        let sum = weights.sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(MrpError::InvalidModel(format!("distribution sums to {sum}")));
        }
        let positive = weights.iter().all(|&w| w > 0.0);
        Ok(Self { weights, positive })
    }

    /// Normalizes arbitrary nonnegative weights.
    pub fn from_weights(weights: Vector) -> Result<Self> {
        let sum = weights.sum();
        if !(sum > 0.0) {
            return Err(MrpError::InvalidModel("weights must have positive total".into()));
        }
        Self::new(weights / sum)
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: Vector::from_element(n, 1.0 / n as f64), positive: true }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn weights(&self) -> &Vector {
        &self.weights
    }
    pub fn is_positive(&self) -> bool {
        self.positive
    }
    pub fn get(&self, s: usize) -> f64 {
        self.weights[s]
    }

    /// diag(ρ), written ρ̂.
    pub fn diag(&self) -> Mat {
        Mat::from_diagonal(&self.weights)
    }

    pub fn require_positive(&self) -> Result<()> {
        match self.weights.iter().position(|&w| w <= 0.0) {
            Some(s) => Err(MrpError::ZeroMeasureState(s)),
            None => Ok(()),
        }
    }
}

/// One observation (s, s', r). `terminal` marks a step that fell into the
/// mass deficit of a substochastic row; `to_state` is then meaningless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSample {
    pub from_state: usize,
    pub to_state: usize,
    pub reward: f64,
    pub terminal: bool,
}

impl TransitionSample {
    pub fn new(from_state: usize, to_state: usize, reward: f64) -> Self {
        Self { from_state, to_state, reward, terminal: false }
    }
    pub fn terminal(from_state: usize, reward: f64) -> Self {
        Self { from_state, to_state: from_state, reward, terminal: true }
    }
    /// γ if the step continues, 0 if it terminated.
    pub fn continuation(&self, gamma: f64) -> f64 {
        if self.terminal {
            0.0
        } else {
            gamma
        }
    }
}
