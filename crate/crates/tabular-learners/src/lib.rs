//! Stochastic tabular learners for the successor matrix M and value functions:
//! forward, backward, mixed and multi-step TD on M, TD(0)/TD(λ) and relative TD
//! on V, a linear parameterization, and a harness checking that tabular TD on
//! M reproduces TD on V exactly.

pub mod checkpoint;
pub mod config;
pub mod linear;
pub mod successor;
pub mod thm25;
pub mod values;

pub use checkpoint::LearnerCheckpoint;
pub use config::{LearnerConfig, Schedule};
pub use linear::{linear_td_step, LinearMModel};
pub use successor::{
    backward_operator, backward_td_column, backward_td_sampled, density_from_successor, expected_backward_column,
    expected_forward_row, forward_operator, forward_td_row, forward_td_sampled, mixed_td_step, multistep_td,
    successor_from_density,
};
pub use thm25::{pinned_product, thm25_harness, EquivalenceReport};
pub use values::{
    relative_successor_exact, relative_td_v, relative_td_v_expected, td0_v, td_lambda_v, trace_expectation_monte_carlo,
    trajectory_burn_in, EligibilityTrace, TraceEstimate,
};
