//! Finite Markov reward and decision processes, with exact oracles for the
//! successor matrix M = (Id − γP)⁻¹ and values V = MR, the norms used to
//! compare estimates of M, seeded samplers, and the time-reversed process.

pub mod error;
pub mod io;
pub mod model;
pub mod norms;
pub mod oracle;
pub mod random;
pub mod sample;

pub use error::{MrpError, Result};
pub use model::{FiniteMdp, FiniteMrp, Mat, RewardNoise, StateDistribution, SuccessorMatrix, TransitionSample, Vector};
pub use norms::{rho_norm, sup_operator_norm, tv_norm};
pub use oracle::{
    backward_process, invert, mdp_to_mrp, mdp_to_state_action_mrp, path_sum_oracle, stationary_distribution,
    successor_exact, successor_partial_sum, value_exact,
};
pub use random::random_mrp;
pub use sample::{sample_transition, stream_rng, LabRng, TransitionSampler};
