use std::io::Write;

use mrp_core::{invert, tv_norm, FiniteMrp, StateDistribution};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flows::{error_matrix, FlowKind, Trajectory};
use crate::spectral::SpectralDecomposition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    /// Frobenius norm of the error in the flow's convention.
    pub frob_error: f64,
    /// ‖M_t − Δ⁻¹‖ in total variation under uniform ρ.
    pub tv_error: f64,
    pub fitted_rate: Option<f64>,
}

pub fn trajectory_rows(traj: &Trajectory, mrp: &FiniteMrp, fitted_rate: Option<f64>) -> Result<Vec<TrajectoryRow>> {
    let delta = mrp.laplacian();
    let star = invert(&delta)?;
    let rho = StateDistribution::uniform(mrp.num_states());
    Ok(traj
        .states
        .iter()
        .map(|s| TrajectoryRow {
            t: s.time,
            frob_error: error_matrix(traj.kind, &s.m, &delta, &star).norm(),
            tv_error: tv_norm(&s.m, &star, &rho),
            fitted_rate,
        })
        .collect())
}

pub fn write_trajectory_csv<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub kind: FlowKind,
    /// (re, im) pairs of the eigenvalues of Δ.
    pub eigenvalues: Vec<(f64, f64)>,
    pub condition: f64,
    pub slowest_rate: f64,
    /// Dyads within `mode_tolerance` of the slowest rate.
    pub slow_mode_multiplicity: usize,
    pub mode_tolerance: f64,
}

impl SpectralReport {
    pub fn new(d: &SpectralDecomposition, mode_tolerance: f64) -> Self {
        let slowest_rate = d.slowest_rate();
        Self {
            kind: d.kind,
            eigenvalues: d.eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
            condition: d.condition,
            slowest_rate,
            slow_mode_multiplicity: d.count_modes(slowest_rate, mode_tolerance),
            mode_tolerance,
        }
    }
}

pub fn write_spectral_json<W: Write>(out: W, report: &SpectralReport) -> Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}
