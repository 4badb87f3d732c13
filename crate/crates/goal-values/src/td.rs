use mrp_core::{StateDistribution, TransitionSample, Vector};
use rand::Rng;

use crate::tensor::{GoalQTensor, GoalTransition, GoalVTable};

/// (s, a, s'), with `next_state = None` when the episode ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionTransition {
    pub state: usize,
    pub action: usize,
    pub next_state: Option<usize>,
}

impl ActionTransition {
    pub fn new(state: usize, action: usize, next_state: usize) -> Self {
        Self { state, action, next_state: Some(next_state) }
    }
    pub fn terminal(state: usize, action: usize) -> Self {
        Self { state, action, next_state: None }
    }
}

/// Goal TD on the density q̃ with an independent goal sample g ∼ ρ_G:
/// q̃(s,a,s) += η and q̃(s,a,g) += η(γ·max_{a'} q̃(s',a',g) − q̃(s,a,g)).
/// Both increments use values read before the update.
pub fn goal_q_td_step(q: &mut GoalQTensor, t: &ActionTransition, goal: usize, gamma: f64, eta: f64) {
    let (s, a) = (t.state, t.action);
    let boot = t.next_state.map_or(0.0, |n| gamma * q.max_action(n, goal).1);
    let gap = boot - q.get(s, a, goal);
    q.add(s, a, s, eta);
    q.add(s, a, goal, eta * gap);
}

/// Minibatch form: the Dirac term once, each of the K goal draws weighted η/K.
/// All bootstrap gaps are read before any entry moves; K = 1 is `goal_q_td_step`.
pub fn goal_q_td_batch_step(q: &mut GoalQTensor, t: &ActionTransition, goals: &[usize], gamma: f64, eta: f64) {
    let (s, a) = (t.state, t.action);
    let w = eta / goals.len() as f64;
    let gaps: Vec<f64> = goals
        .iter()
        .map(|&g| t.next_state.map_or(0.0, |n| gamma * q.max_action(n, g).1) - q.get(s, a, g))
        .collect();
    q.add(s, a, s, eta);
    for (&g, gap) in goals.iter().zip(gaps) {
        q.add(s, a, g, w * gap);
    }
}

/// v(s, φ(s)) += η and v(s, g) += η(γv(s', g) − v(s, g)), g the transition's goal.
pub fn goal_v_td_step(v: &mut GoalVTable, t: &GoalTransition, gamma: f64, eta: f64) {
    let (s, g) = (t.from_state, t.goal);
    let gap = gamma * v.values[(t.to_state, g)] - v.values[(s, g)];
    let own = v.phi(s);
    v.values[(s, own)] += eta;
    v.values[(s, g)] += eta * gap;
}

/// Successor-feature TD under a fixed policy with a goal drawn from τ:
/// m(s, φ(s)) += η and m(s, g) += η(γm(s', g) − m(s, g)); terminal steps drop γm(s', g).
pub fn feature_goal_td_step(m_phi: &mut GoalVTable, t: &TransitionSample, goal: usize, gamma: f64, eta: f64) {
    let s = t.from_state;
    let c = t.continuation(gamma);
    let boot = if c == 0.0 { 0.0 } else { c * m_phi.values[(t.to_state, goal)] };
    let gap = boot - m_phi.values[(s, goal)];
    let own = m_phi.phi(s);
    m_phi.values[(s, own)] += eta;
    m_phi.values[(s, goal)] += eta * gap;
}

/// V(s) = Σ_g τ(g)·m^φ(s, g)·R(g).
pub fn value_from_feature_goals(m_phi: &GoalVTable, reward_on_features: &[f64]) -> Vector {
    assert_eq!(reward_on_features.len(), m_phi.num_goals(), "one reward per feature goal");
    let tau = m_phi.rho_goal();
    Vector::from_fn(m_phi.num_states(), |s, _| {
        (0..m_phi.num_goals()).map(|g| tau.get(g) * m_phi.values[(s, g)] * reward_on_features[g]).sum()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalSampling {
    /// Independent draws from ρ_G.
    Iid,
    /// Per-key golden-ratio sequence pushed through the inverse CDF of ρ_G.
    /// Each draw is still ρ_G-distributed (the key's offset is uniform), but
    /// the empirical goal frequencies of every key track ρ_G to O(log n / n).
    Stratified,
    /// Systematic sampling within each batch: one uniform offset u₀, draws at
    /// frac(u₀ + j/K). Every draw is marginally ρ_G; a batch of K = |G| under
    /// uniform ρ_G contains every goal exactly once.
    Systematic,
}

/// Goal draws g ∼ ρ_G, optionally stratified per key (for example per (s, a)).
#[derive(Debug, Clone)]
pub struct GoalSampler {
    cdf: Vec<f64>,
    mode: GoalSampling,
    phase: Vec<Option<f64>>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

impl GoalSampler {
    pub fn new(rho_goal: &StateDistribution, mode: GoalSampling, keys: usize) -> Self {
        let mut acc = 0.0;
        let cdf = rho_goal
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self { cdf, mode, phase: vec![None; keys] }
    }

    fn invert(&self, u: f64) -> usize {
        let total = *self.cdf.last().expect("non-empty goal law");
        let x = u * total;
        self.cdf.partition_point(|&c| c <= x).min(self.cdf.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, key: usize, rng: &mut R) -> usize {
        match self.mode {
            GoalSampling::Iid | GoalSampling::Systematic => self.invert(rng.random::<f64>()),
            GoalSampling::Stratified => {
                let u = match self.phase[key] {
                    Some(p) => (p + GOLDEN).fract(),
                    None => rng.random::<f64>(),
                };
                self.phase[key] = Some(u);
                self.invert(u)
            }
        }
    }

    /// Replaces `out` with `k` draws for `key`.
    pub fn sample_batch<R: Rng + ?Sized>(&mut self, key: usize, k: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        if self.mode == GoalSampling::Systematic {
            let u0 = rng.random::<f64>();
            out.extend((0..k).map(|j| self.invert((u0 + j as f64 / k as f64).fract())));
        } else {
            out.extend((0..k).map(|_| self.sample(key, rng)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mrp_core::{stream_rng, Mat};

    #[test]
    fn goal_q_from_zero_sets_dirac_only() {
        let mut q = GoalQTensor::zeros(3, 2, StateDistribution::uniform(3)).unwrap();
        goal_q_td_step(&mut q, &ActionTransition::new(1, 0, 2), 2, 0.9, 1.0);
        for (i, &v) in q.values().iter().enumerate() {
            let want = if i == 2 * 3 + 1 { 1.0 } else { 0.0 };
            assert_eq!(v, want);
        }
    }

    #[test]
    fn batch_of_one_is_single_step() {
        let rho = StateDistribution::uniform(3);
        let mut q = GoalQTensor::from_masses(3, 2, rho, |s, a, g| (s * 7 + a * 3 + g) as f64 * 0.1).unwrap();
        let mut r = q.clone();
        let t = ActionTransition::new(2, 1, 0);
        goal_q_td_step(&mut q, &t, 2, 0.9, 0.3);
        goal_q_td_batch_step(&mut r, &t, &[2], 0.9, 0.3);
        assert_eq!(q, r);
    }

    #[test]
    fn goal_v_from_zero() {
        let mut v = GoalVTable::over_states(StateDistribution::uniform(3));
        goal_v_td_step(&mut v, &GoalTransition::new(0, 1, 2), 0.9, 1.0);
        let mut want = Mat::zeros(3, 3);
        want[(0, 0)] = 1.0;
        assert_eq!(v.values, want);
    }

    #[test]
    fn feature_reward_zero_gives_zero_value() {
        let mut m = GoalVTable::over_features(vec![0, 1, 0], StateDistribution::uniform(2)).unwrap();
        m.values = Mat::from_element(3, 2, 3.0);
        assert_eq!(value_from_feature_goals(&m, &[0.0, 0.0]), Vector::zeros(3));
    }

    #[test]
    fn stratified_frequencies_track_rho() {
        let rho = StateDistribution::new(Vector::from_vec(vec![0.1, 0.2, 0.3, 0.4])).unwrap();
        let mut smp = GoalSampler::new(&rho, GoalSampling::Stratified, 2);
        let mut rng = stream_rng(3, 0);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[smp.sample(1, &mut rng)] += 1;
        }
        for g in 0..4 {
            assert!((counts[g] as f64 / 10_000.0 - rho.get(g)).abs() < 2e-3, "{counts:?}");
        }
    }

    #[test]
    fn systematic_full_batch_covers_every_goal() {
        let mut smp = GoalSampler::new(&StateDistribution::uniform(7), GoalSampling::Systematic, 1);
        let mut rng = stream_rng(5, 0);
        let mut out = Vec::new();
        for _ in 0..50 {
            smp.sample_batch(0, 7, &mut rng, &mut out);
            out.sort_unstable();
            assert_eq!(out, (0..7).collect::<Vec<_>>());
        }
        // marginal law of a single systematic draw is ρ_G
        let rho = StateDistribution::new(Vector::from_vec(vec![0.7, 0.3])).unwrap();
        let mut smp = GoalSampler::new(&rho, GoalSampling::Systematic, 1);
        let zeros = (0..20_000)
            .filter(|_| {
                smp.sample_batch(0, 3, &mut rng, &mut out);
                out[1] == 0
            })
            .count();
        assert!((zeros as f64 / 20_000.0 - 0.7).abs() < 0.02);
    }

    #[test]
    fn iid_frequencies_track_rho() {
        let rho = StateDistribution::new(Vector::from_vec(vec![0.5, 0.0, 0.5])).unwrap();
        let mut smp = GoalSampler::new(&rho, GoalSampling::Iid, 1);
        let mut rng = stream_rng(4, 0);
        let mut counts = [0usize; 3];
        for _ in 0..4000 {
            counts[smp.sample(0, &mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!((counts[0] as f64 / 4000.0 - 0.5).abs() < 0.05);
    }
}
