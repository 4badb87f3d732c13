use mrp_core::{stream_rng, FiniteMdp, StateDistribution};
use rand::Rng;

use crate::envs::gridworld;
use crate::error::Result;
use crate::oracle::{bfs_distances, greedy_path_length, greedy_policy, per_goal_oracle};
use crate::td::{goal_q_td_batch_step, ActionTransition, GoalSampler, GoalSampling};
use crate::tensor::{GoalQTensor, GoalTransition};

/// One goal-TD sample: the transition plus the goal g ∼ ρ_G it was paired with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoalSample {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub goal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalGridConfig {
    pub width: usize,
    pub height: usize,
    pub obstacles: Vec<usize>,
    pub gamma: f64,
    pub samples: usize,
    /// Behavior is ε-greedy on the current q̃ for an episode goal.
    pub epsilon: f64,
    pub episode_length: usize,
    /// η = scale·(warmup / (warmup + n))^exponent, n = prior visits of (s, a).
    pub step_scale: f64,
    pub step_warmup: f64,
    pub step_exponent: f64,
    pub goal_sampling: GoalSampling,
    /// Goal draws paired with each transition (minibatch size K).
    pub goals_per_sample: usize,
    pub record_dataset: bool,
}

impl Default for GoalGridConfig {
    fn default() -> Self {
        Self {
            width: 5,
            height: 5,
            obstacles: Vec::new(),
            gamma: 0.9,
            samples: 1_000_000,
            epsilon: 0.2,
            episode_length: 50,
            step_scale: 1.0,
            step_warmup: 2000.0,
            step_exponent: 1.0,
            goal_sampling: GoalSampling::Systematic,
            goals_per_sample: 25,
            record_dataset: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GoalGridReport {
    pub q: GoalQTensor,
    pub dataset: Vec<GoalSample>,
    /// Visits per (s, a), index s·A + a.
    pub visits: Vec<u64>,
    /// Fraction of (start, goal) pairs, start ≠ goal and reachable, where the
    /// greedy policy takes exactly the BFS number of steps.
    pub optimal_path_fraction: f64,
    pub pairs: usize,
    /// max |q̃·ρ_G − Q*| over (s, a, g).
    pub max_q_error: f64,
    /// max |max_a q̃·ρ_G − V*| over (s, g).
    pub max_value_error: f64,
}

pub fn run_goal_grid(cfg: &GoalGridConfig, seed: u64) -> Result<GoalGridReport> {
    let mdp = gridworld(cfg.width, cfg.height, &cfg.obstacles, cfg.gamma)?;
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let rho_goal = StateDistribution::uniform(n);
    let mut q = GoalQTensor::zeros(n, na, rho_goal.clone())?;
    let mut sampler = GoalSampler::new(&rho_goal, cfg.goal_sampling, n * na);
    let mut behavior_rng = stream_rng(seed, 0);
    let mut goal_rng = stream_rng(seed, 1);
    let mut visits = vec![0u64; n * na];
    let mut dataset = Vec::with_capacity(if cfg.record_dataset { cfg.samples } else { 0 });

    let mut s = behavior_rng.random_range(0..n);
    let mut episode_goal = behavior_rng.random_range(0..n);
    let mut age = 0;
    let mut goals = Vec::with_capacity(cfg.goals_per_sample);
    for _ in 0..cfg.samples {
        if age == cfg.episode_length {
            s = behavior_rng.random_range(0..n);
            episode_goal = behavior_rng.random_range(0..n);
            age = 0;
        }
        let a = if behavior_rng.random::<f64>() < cfg.epsilon {
            behavior_rng.random_range(0..na)
        } else {
            q.max_action(s, episode_goal).0
        };
        let next = mdp.outcomes(s, a)[0].0;
        let key = s * na + a;
        let eta = cfg.step_scale * (cfg.step_warmup / (cfg.step_warmup + visits[key] as f64)).powf(cfg.step_exponent);
        visits[key] += 1;
        sampler.sample_batch(key, cfg.goals_per_sample.max(1), &mut goal_rng, &mut goals);
        goal_q_td_batch_step(&mut q, &ActionTransition::new(s, a, next), &goals, cfg.gamma, eta);
        if cfg.record_dataset {
            dataset.extend(goals.iter().map(|&g| GoalSample { state: s, action: a, next_state: next, goal: g }));
        }
        s = next;
        age += 1;
    }

    let (optimal_path_fraction, pairs) = path_optimality(&mdp, &q);
    let (max_q_error, max_value_error) = oracle_errors(&mdp, &q)?;
    Ok(GoalGridReport { q, dataset, visits, optimal_path_fraction, pairs, max_q_error, max_value_error })
}

/// (fraction of BFS-optimal greedy paths, number of pairs checked).
pub fn path_optimality(mdp: &FiniteMdp, q: &GoalQTensor) -> (f64, usize) {
    let n = mdp.num_states();
    let policy = greedy_policy(q);
    let (mut good, mut pairs) = (0usize, 0usize);
    for g in 0..n {
        let dist = bfs_distances(mdp, g);
        for start in (0..n).filter(|&s| s != g) {
            if let Some(d) = dist[start] {
                pairs += 1;
                if greedy_path_length(mdp, &policy[g], start, g, n) == Some(d) {
                    good += 1;
                }
            }
        }
    }
    (if pairs == 0 { 1.0 } else { good as f64 / pairs as f64 }, pairs)
}

/// (max Q error, max V error) of the rescaled tensor against per-goal value iteration.
pub fn oracle_errors(mdp: &FiniteMdp, q: &GoalQTensor) -> Result<(f64, f64)> {
    let (n, na) = (mdp.num_states(), mdp.num_actions());
    let (mut eq, mut ev) = (0.0f64, 0.0f64);
    for g in 0..n {
        let o = per_goal_oracle(mdp, g)?;
        let learned = q.goal_masses(g);
        eq = eq.max((&learned - &o.q).amax());
        for s in 0..n {
            let lv = (0..na).map(|a| learned[(s, a)]).fold(f64::NEG_INFINITY, f64::max);
            let ov = (0..na).map(|a| o.q[(s, a)]).fold(f64::NEG_INFINITY, f64::max);
            ev = ev.max((lv - ov).abs());
        }
    }
    Ok((eq, ev))
}

/// Goal-correlated stream: draw g ∼ ρ_G, follow `policies[g]`, and redraw g
/// with probability `switch_prob` after each step (geometric run lengths).
/// Terminating transitions restart from a uniform state.
pub fn correlated_goal_transitions<R: Rng + ?Sized>(
    mdp: &FiniteMdp,
    policies: &[Vec<usize>],
    rho_goal: &StateDistribution,
    switch_prob: f64,
    steps: usize,
    rng: &mut R,
) -> Vec<GoalTransition> {
    let n = mdp.num_states();
    let mut goals = GoalSampler::new(rho_goal, GoalSampling::Iid, 1);
    let mut s = rng.random_range(0..n);
    let mut g = goals.sample(0, rng);
    let mut out = Vec::with_capacity(steps);
    while out.len() < steps {
        let row = mdp.outcomes(s, policies[g][s]);
        let mut u = rng.random::<f64>();
        let next = row.iter().find(|&&(_, p)| {
            u -= p;
            u < 0.0
        });
        match next {
            Some(&(t, _)) => {
                out.push(GoalTransition::new(s, t, g));
                s = t;
            }
            None => s = rng.random_range(0..n),
        }
        if rng.random::<f64>() < switch_prob {
            g = goals.sample(0, rng);
        }
    }
    out
}
