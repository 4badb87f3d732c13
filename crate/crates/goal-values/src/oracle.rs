use std::collections::VecDeque;

use mrp_core::{FiniteMdp, FiniteMrp, Mat, Vector};

use crate::error::{GoalError, Result};
use crate::tensor::GoalQTensor;

const VI_TOL: f64 = 1e-10;
const VI_MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PerGoalOracle {
    /// Q*(s, a) for reward 1_{s=g}.
    pub q: Mat,
    pub policy: Vec<usize>,
    pub sweeps: usize,
}

fn argmax_row(q: &Mat, s: usize) -> (usize, f64) {
    let mut best = (0, q[(s, 0)]);
    for a in 1..q.ncols() {
        if q[(s, a)] > best.1 {
            best = (a, q[(s, a)]);
        }
    }
    best
}

/// Dense value iteration on reward 1_{s=g} until the sup residual is ≤ 1e−10.
pub fn per_goal_oracle(mdp: &FiniteMdp, goal: usize) -> Result<PerGoalOracle> {
    let (n, na) = (mdp.num_states(), mdp.num_actions());
    if goal >= n {
        return Err(GoalError::OutOfRange { index: goal, bound: n });
    }
    let gamma = mdp.discount();
    let mut q = Mat::zeros(n, na);
    let mut residual = f64::INFINITY;
    for sweep in 1..=VI_MAX_SWEEPS {
        let v: Vec<f64> = (0..n).map(|s| argmax_row(&q, s).1).collect();
        let next = Mat::from_fn(n, na, |s, a| {
            f64::from(u8::from(s == goal)) + gamma * mdp.outcomes(s, a).iter().map(|&(t, p)| p * v[t]).sum::<f64>()
        });
        residual = (&next - &q).amax();
        q = next;
        if residual <= VI_TOL {
            let policy = (0..n).map(|s| argmax_row(&q, s).0).collect();
            return Ok(PerGoalOracle { q, policy, sweeps: sweep });
        }
    }
    Err(GoalError::NoConvergence { iterations: VI_MAX_SWEEPS, residual })
}

/// Value iteration for V = e_g + γP_g V on the policy-induced chain.
pub fn per_goal_policy_evaluation(mrp_g: &FiniteMrp, goal: usize) -> Result<Vector> {
    let n = mrp_g.num_states();
    if goal >= n {
        return Err(GoalError::OutOfRange { index: goal, bound: n });
    }
    let p = mrp_g.transition() * mrp_g.discount();
    let mut v = Vector::zeros(n);
    let mut residual = f64::INFINITY;
    for _ in 0..VI_MAX_SWEEPS {
        let mut next = &p * &v;
        next[goal] += 1.0;
        residual = (&next - &v).amax();
        v = next;
        if residual <= VI_TOL {
            return Ok(v);
        }
    }
    Err(GoalError::NoConvergence { iterations: VI_MAX_SWEEPS, residual })
}

/// Fewest steps from each state to `goal` along positive-probability transitions.
pub fn bfs_distances(mdp: &FiniteMdp, goal: usize) -> Vec<Option<usize>> {
    let preds = mdp.predecessors();
    let mut dist = vec![None; mdp.num_states()];
    dist[goal] = Some(0);
    let mut queue = VecDeque::from([goal]);
    while let Some(t) = queue.pop_front() {
        let d = dist[t].expect("queued states have a distance");
        for &(s, _, _) in &preds[t] {
            if dist[s].is_none() {
                dist[s] = Some(d + 1);
                queue.push_back(s);
            }
        }
    }
    dist
}

/// `policy[g][s]`: argmax_a q̃(s, a, g), lowest index on ties.
pub fn greedy_policy(q: &GoalQTensor) -> Vec<Vec<usize>> {
    (0..q.num_states()).map(|g| (0..q.num_states()).map(|s| q.max_action(s, g).0).collect()).collect()
}

/// Steps taken by a policy from `start` until it first reaches `goal`, on
/// deterministic dynamics. `None` if it does not arrive within `max_steps`
/// or meets a stochastic or terminating transition.
pub fn greedy_path_length(mdp: &FiniteMdp, policy: &[usize], start: usize, goal: usize, max_steps: usize) -> Option<usize> {
    let mut s = start;
    for k in 0..=max_steps {
        if s == goal {
            return Some(k);
        }
        match mdp.outcomes(s, policy[s]) {
            [(t, p)] if *p == 1.0 => s = *t,
            _ => return None,
        }
    }
    None
}
