//! Implicit process estimation and Bellman-Newton iteration.
//!
//! `ProcessEstimate` keeps an empirical kernel P̂ together with its successor
//! matrix M̂ = (Id − γP̂)⁻¹, updated by a rank-one identity at each observed
//! transition rather than re-inverted.

pub mod bounds;
pub mod estimate;
pub mod newton;
pub mod trials;

pub use bounds::thm16_bound;
pub use estimate::{observe, ssipe_delta_m, ssipe_delta_v, ssipe_trial, EstimateError, ProcessEstimate, TrialResult};
pub use newton::{
    bn_iterate_exact, bn_step_exact, bn_step_parametric, bn_step_sampled, preconditioned_td_v, sampled_bn_stability_scan,
    BnGuard, StabilityPoint,
};
pub use trials::{coverage, run_trials, write_trials_csv};
