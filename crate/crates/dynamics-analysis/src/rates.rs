use mrp_core::{invert, FiniteMrp, Mat};

use crate::error::{DynamicsError, Result};
use crate::flows::{error_matrix, integrate_flow_with, FlowKind, FlowOptions, Trajectory};

/// Only errors below this enter the fit (the asymptotic regime).
pub const RATE_FIT_CEILING: f64 = 0.1;
/// Errors below this are dominated by cancellation in M − Δ⁻¹ and are dropped.
pub const RATE_FIT_FLOOR: f64 = 1e-10;
pub const RATE_FIT_MIN_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// r in ‖E_t‖ ≈ C·e^{−rt}.
    pub rate: f64,
    pub log_intercept: f64,
    pub points: usize,
    pub r_squared: f64,
}

/// Least-squares slope of log‖E_t‖ against t over the small-error regime.
pub fn rate_fit(series: &[(f64, f64)]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|&&(_, e)| e < RATE_FIT_CEILING && e > RATE_FIT_FLOOR)
        .map(|&(t, e)| (t, e.ln()))
        .collect();
    if pts.len() < RATE_FIT_MIN_POINTS {
        return Err(DynamicsError::InsufficientData { have: pts.len(), need: RATE_FIT_MIN_POINTS });
    }
    let k = pts.len() as f64;
    let (mt, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    let syy: f64 = pts.iter().map(|(_, y)| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(DynamicsError::InsufficientData { have: 1, need: RATE_FIT_MIN_POINTS });
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit { rate: -slope, log_intercept: my - slope * mt, points: pts.len(), r_squared })
}

/// (t, ‖E_t‖_F) along a trajectory, E in the flow's own convention.
pub fn error_series(traj: &Trajectory, mrp: &FiniteMrp) -> Result<Vec<(f64, f64)>> {
    let delta = mrp.laplacian();
    let star = invert(&delta)?;
    Ok(traj.states.iter().map(|s| (s.time, error_matrix(traj.kind, &s.m, &delta, &star).norm())).collect())
}

/// Integrates the flow and fits its asymptotic decay rate.
pub fn fit_flow_rate(
    kind: FlowKind,
    mrp: &FiniteMrp,
    m0: &Mat,
    t_end: f64,
    opts: FlowOptions,
) -> Result<(Trajectory, RateFit)> {
    let traj = integrate_flow_with(kind, mrp, m0, t_end, opts)?;
    let fit = rate_fit(&error_series(&traj, mrp)?)?;
    Ok((traj, fit))
}
