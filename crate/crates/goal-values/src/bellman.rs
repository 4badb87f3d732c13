use std::collections::BTreeMap;

use mrp_core::{FiniteMdp, StateDistribution};

use crate::error::Result;
use crate::tensor::GoalQTensor;

/// (TQ)(s,a,g) = 1_{s=g} + γ·Σ_{s'} P(s,a,s')·max_{a'} Q(s',a',g), in masses.
pub fn optimal_bellman_apply(q: &GoalQTensor, mdp: &FiniteMdp) -> GoalQTensor {
    let (n, na) = (mdp.num_states(), mdp.num_actions());
    assert_eq!((q.num_states(), q.num_actions()), (n, na), "tensor and MDP shapes differ");
    let gamma = mdp.discount();
    // best[s'][g] = max_a' Q(s', a', {g})
    let best: Vec<Vec<f64>> = (0..n).map(|s| (0..n).map(|g| q.max_action(s, g).1 * q.rho_goal().get(g)).collect()).collect();
    GoalQTensor::from_masses(n, na, q.rho_goal().clone(), |s, a, g| {
        let boot: f64 = mdp.outcomes(s, a).iter().map(|&(t, p)| p * best[t][g]).sum();
        f64::from(u8::from(s == g)) + gamma * boot
    })
    .expect("shape already validated")
}

/// T^t applied to the zero tensor, with ρ_G uniform.
pub fn horizon_q(mdp: &FiniteMdp, t: usize) -> GoalQTensor {
    horizon_q_with(mdp, t, StateDistribution::uniform(mdp.num_states())).expect("uniform goal law is positive")
}

pub fn horizon_q_with(mdp: &FiniteMdp, t: usize, rho_goal: StateDistribution) -> Result<GoalQTensor> {
    let mut q = GoalQTensor::zeros(mdp.num_states(), mdp.num_actions(), rho_goal)?;
    for _ in 0..t {
        q = optimal_bellman_apply(&q, mdp);
    }
    Ok(q)
}

/// One goal's slice of T^t𝟘 stored on its support only.
///
/// Q_t(·,·,g) is nonzero only on state-action pairs from which g is reachable
/// within t−1 steps, so it is propagated backwards through predecessors.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalColumn {
    pub goal: usize,
    pub horizon: usize,
    pub masses: BTreeMap<(usize, usize), f64>,
}

impl GoalColumn {
    pub fn zero(goal: usize) -> Self {
        Self { goal, horizon: 0, masses: BTreeMap::new() }
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.masses.get(&(s, a)).copied().unwrap_or(0.0)
    }

    /// max_a Q(s, a, {g}) for every state on the support.
    fn state_values(&self, actions: usize) -> BTreeMap<usize, f64> {
        let mut best: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for (&(s, _), &v) in &self.masses {
            let e = best.entry(s).or_insert((f64::NEG_INFINITY, 0));
            e.0 = e.0.max(v);
            e.1 += 1;
        }
        best.into_iter().map(|(s, (v, k))| (s, if k < actions { v.max(0.0) } else { v })).collect()
    }

    /// Applies T once; `preds` is `mdp.predecessors()`.
    pub fn step(&self, mdp: &FiniteMdp, preds: &[Vec<(usize, usize, f64)>]) -> Self {
        let gamma = mdp.discount();
        let mut next: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (t, v) in self.state_values(mdp.num_actions()) {
            if v == 0.0 {
                continue;
            }
            for &(s, a, p) in &preds[t] {
                *next.entry((s, a)).or_insert(0.0) += gamma * p * v;
            }
        }
        for a in 0..mdp.num_actions() {
            *next.entry((self.goal, a)).or_insert(0.0) += 1.0;
        }
        Self { goal: self.goal, horizon: self.horizon + 1, masses: next }
    }
}

/// Total mass of Q(state, action, ·) in T^t𝟘 for t = 0..=t_max, summed goal by goal.
pub fn root_mass_profile(mdp: &FiniteMdp, state: usize, action: usize, t_max: usize) -> Vec<f64> {
    let preds = mdp.predecessors();
    let mut profile = vec![0.0; t_max + 1];
    for g in 0..mdp.num_states() {
        let mut col = GoalColumn::zero(g);
        for slot in profile.iter_mut().skip(1) {
            col = col.step(mdp, &preds);
            *slot += col.get(state, action);
        }
    }
    profile
}

/// 1 + Σ_{k=1}^{min(t, depth)} γ^k 2^{k−1}: root mass on the depth-`depth`
/// dyadic tree counting paths of length ≤ t, i.e. the mass in T^{t+1}𝟘.
pub fn dyadic_mass_closed_form(gamma: f64, depth: usize, t: usize) -> f64 {
    1.0 + (1..=t.min(depth)).map(|k| gamma.powi(k as i32) * 2f64.powi(k as i32 - 1)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::dyadic_tree;

    #[test]
    fn sparse_columns_match_dense_horizon() {
        let mdp = dyadic_tree(4, 0.7).unwrap();
        let preds = mdp.predecessors();
        for t in [1, 3, 6] {
            let dense = horizon_q(&mdp, t);
            for g in [0, 5, 30] {
                let mut col = GoalColumn::zero(g);
                for _ in 0..t {
                    col = col.step(&mdp, &preds);
                }
                for s in 0..mdp.num_states() {
                    for a in 0..2 {
                        assert!((col.get(s, a) - dense.mass(s, a, g)).abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_small_cases() {
        assert_eq!(dyadic_mass_closed_form(0.5, 3, 0), 1.0);
        assert!((dyadic_mass_closed_form(0.5, 3, 2) - 2.0).abs() < 1e-15);
        assert!((dyadic_mass_closed_form(0.5, 3, 9) - 2.5).abs() < 1e-15);
    }
}
