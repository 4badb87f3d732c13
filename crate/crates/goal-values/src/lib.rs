//! Goal-conditioned values at tabular scale.
//!
//! A goal-conditioned Q function is a measure over goal states,
//! Q(s, a, {g}) = q̃(s, a, g)·ρ_G(g). Learners store the density q̃; the
//! Bellman operator and oracles speak in masses.

pub mod bellman;
pub mod envs;
pub mod error;
pub mod experiment;
pub mod io;
pub mod oracle;
pub mod tensor;
pub mod td;

pub use bellman::{dyadic_mass_closed_form, horizon_q, horizon_q_with, optimal_bellman_apply, root_mass_profile, GoalColumn};
pub use envs::{dyadic_tree, gridworld};
pub use error::{GoalError, Result};
pub use experiment::{
    correlated_goal_transitions, run_goal_grid, GoalGridConfig, GoalGridReport, GoalSample,
};
pub use oracle::{
    bfs_distances, greedy_path_length, greedy_policy, per_goal_oracle, per_goal_policy_evaluation, PerGoalOracle,
};
pub use td::{
    feature_goal_td_step, goal_q_td_batch_step, goal_q_td_step, goal_v_td_step, value_from_feature_goals, ActionTransition, GoalSampler,
    GoalSampling,
};
pub use tensor::{GoalQTensor, GoalTransition, GoalVTable};
