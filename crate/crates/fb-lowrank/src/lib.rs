//! Forward-backward low-rank successor models, m̃(s₁, s₂) = F(s₁)ᵀB(s₂).

pub mod model;
pub mod oracle;
pub mod thm41;
pub mod updates;
pub mod value;

pub use model::{FbCheckpoint, FbError, FbModel, FbVariant, Result, Rule};
pub use oracle::{
    classify_fixed_point, column_projector, conjugate, conjugated_singular_values, dirichlet_form, max_principal_angle,
    numerical_rank, svd_conditions, truncated_svd_oracle, unconjugate, weak_inverse_fixed_point, ClassificationReport,
};
pub use thm41::{thm41_harness, thm41_harness_unchecked, Thm41Report};
pub use updates::{
    converge_exact, fb_bn_step_exact, fb_bn_step_sampled, fb_bn_update, fb_exact_update, fb_residual, fb_td_step_exact,
    fb_td_step_sampled, Convergence, FbStats, EMA_DECAY, WARM_UP,
};
pub use value::{fb_value, fb_value_from_stream, RewardEmbedding};
