//! Continuous-time flows of successor-matrix learning rules and their error analysis.
//!
//! Four flows on M are integrated with RK4: forward `Id − ΔM`, backward `Id − MΔ`,
//! mixed `Id − ½(ΔM + MΔ)` and Bellman–Newton `M − MΔM`, with Δ = Id − γP.

pub mod bn_ode;
pub mod certificate;
pub mod error;
pub mod flows;
pub mod io;
pub mod rates;
pub mod spectral;

pub use bn_ode::{
    bn_diverges, bn_error_ode_check, bn_error_predict, divergence_frequency, integrate_scalar_bn, BnScalarOutcome,
};
pub use certificate::{path_certificate, path_certificate_tol, PathCertificate};
pub use error::{DynamicsError, Result};
pub use flows::{
    closed_form, error_matrix, implied_transition, integrate_flow, integrate_flow_with, torus, FlowKind, FlowOptions,
    FlowState, Trajectory,
};
pub use io::{trajectory_rows, write_spectral_json, write_trajectory_csv, SpectralReport, TrajectoryRow};
pub use rates::{error_series, fit_flow_rate, rate_fit, RateFit, RATE_FIT_CEILING, RATE_FIT_FLOOR};
pub use spectral::{decompose, dyad_rate, spectral_error, CMat, Eigen, SpectralDecomposition};
