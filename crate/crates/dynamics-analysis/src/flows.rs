use mrp_core::{invert, sup_operator_norm, FiniteMrp, Mat, Vector};
use serde::{Deserialize, Serialize};

use crate::error::{DynamicsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Forward,
    Backward,
    Mixed,
    Bn,
}

impl FlowKind {
    pub const ALL: [FlowKind; 4] = [FlowKind::Forward, FlowKind::Backward, FlowKind::Mixed, FlowKind::Bn];

    pub fn name(self) -> &'static str {
        match self {
            FlowKind::Forward => "forward",
            FlowKind::Backward => "backward",
            FlowKind::Mixed => "mixed",
            FlowKind::Bn => "bn",
        }
    }

    /// dM/dt at M.
    pub fn derivative(self, m: &Mat, delta: &Mat) -> Mat {
        let n = m.nrows();
        let id = Mat::identity(n, n);
        match self {
            FlowKind::Forward => id - delta * m,
            FlowKind::Backward => id - m * delta,
            FlowKind::Mixed => id - (delta * m + m * delta) * 0.5,
            FlowKind::Bn => m - m * delta * m,
        }
    }
}

impl std::str::FromStr for FlowKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        FlowKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown flow kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub time: f64,
    pub m: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Nominal RK4 step.
    pub step: f64,
    /// Record a state every this many nominal steps.
    pub record_every: usize,
    /// Accepted local error per step, relative to max(1, max|M|).
    pub tolerance: f64,
    /// ‖M‖∞ above which the run stops with `BlowUp`.
    pub blow_up: f64,
    pub max_halvings: u32,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { step: 1e-3, record_every: 100, tolerance: 1e-10, blow_up: 1e6, max_halvings: 30 }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: FlowKind,
    /// States on the nominal grid, first at t = 0, last at t_end.
    pub states: Vec<FlowState>,
    /// Largest step-halving error estimate of any accepted step.
    pub max_error_estimate: f64,
    /// Number of nominal steps that had to be subdivided.
    pub subdivided_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn rk4(kind: FlowKind, m: &Mat, delta: &Mat, h: f64) -> Mat {
    let k1 = kind.derivative(m, delta);
    let k2 = kind.derivative(&(m + &k1 * (h / 2.0)), delta);
    let k3 = kind.derivative(&(m + &k2 * (h / 2.0)), delta);
    let k4 = kind.derivative(&(m + &k3 * h), delta);
    m + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

struct Stepper<'a> {
    kind: FlowKind,
    delta: &'a Mat,
    opts: FlowOptions,
    max_estimate: f64,
}

impl Stepper<'_> {
    /// Advances by h, comparing one step against two half steps and
    /// recursing on the halves when the estimate exceeds the tolerance.
    fn advance(&mut self, m: &Mat, h: f64, time: f64, depth: u32) -> Result<(Mat, bool)> {
        let full = rk4(self.kind, m, self.delta, h);
        let half = rk4(self.kind, m, self.delta, h / 2.0);
        let two = rk4(self.kind, &half, self.delta, h / 2.0);
        let estimate = (&full - &two).amax() / 15.0;
        let scale = m.amax().max(1.0);
        let norm = sup_operator_norm(&two);
        // steps that end past the threshold are refined so the crossing time is located
        let bounded = norm.is_finite() && norm <= self.opts.blow_up;
        if bounded && estimate.is_finite() && estimate <= self.opts.tolerance * scale {
            self.max_estimate = self.max_estimate.max(estimate / scale);
            return Ok((two, false));
        }
        if depth >= self.opts.max_halvings {
            if !bounded {
                return Err(DynamicsError::BlowUp { time: time + h, norm });
            }
            return Err(DynamicsError::StepUnderflow { time, estimate });
        }
        let (mid, _) = self.advance(m, h / 2.0, time, depth + 1)?;
        let (end, _) = self.advance(&mid, h / 2.0, time + h / 2.0, depth + 1)?;
        Ok((end, true))
    }

    fn check_norm(&self, m: &Mat, time: f64) -> Result<()> {
        let norm = sup_operator_norm(m);
        if !norm.is_finite() || norm > self.opts.blow_up {
            return Err(DynamicsError::BlowUp { time, norm });
        }
        Ok(())
    }
}

/// RK4 integration of the flow from `m0` over [0, t_end] with default options
/// and the given nominal step.
pub fn integrate_flow(kind: FlowKind, mrp: &FiniteMrp, m0: &Mat, t_end: f64, step: f64) -> Result<Trajectory> {
    integrate_flow_with(kind, mrp, m0, t_end, FlowOptions { step, ..FlowOptions::default() })
}

pub fn integrate_flow_with(
    kind: FlowKind,
    mrp: &FiniteMrp,
    m0: &Mat,
    t_end: f64,
    opts: FlowOptions,
) -> Result<Trajectory> {
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(DynamicsError::InvalidStep(opts.step));
    }
    let n = mrp.num_states();
    if m0.shape() != (n, n) {
        return Err(DynamicsError::Shape(format!("M0 is {:?}, expected {n}x{n}", m0.shape())));
    }
    let delta = mrp.laplacian();
    let steps = (t_end.max(0.0) / opts.step).round() as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut stepper = Stepper { kind, delta: &delta, opts, max_estimate: 0.0 };
    stepper.check_norm(m0, 0.0)?;

    let mut m = m0.clone();
    let mut states = vec![FlowState { time: 0.0, m: m.clone() }];
    let mut subdivided = 0;
    let every = opts.record_every.max(1);
    for k in 0..steps {
        let time = k as f64 * h;
        let (next, split) = stepper.advance(&m, h, time, 0)?;
        subdivided += usize::from(split);
        m = next;
        if (k + 1) % every == 0 || k + 1 == steps {
            states.push(FlowState { time: (k + 1) as f64 * h, m: m.clone() });
        }
    }
    Ok(Trajectory { kind, states, max_error_estimate: stepper.max_estimate, subdivided_steps: subdivided })
}

/// Exact solution at time t. The three linear flows relax M₀ − Δ⁻¹ through
/// e^{−tΔ} on the left, right or both halves; the BN flow solves
/// M_t⁻¹ = Δ + e^{−t}(M₀⁻¹ − Δ), i.e. M_t = (Id − γP_t)⁻¹ with P_t = P + e^{−t}(P₀ − P).
pub fn closed_form(kind: FlowKind, mrp: &FiniteMrp, m0: &Mat, t: f64) -> Result<Mat> {
    let delta = mrp.laplacian();
    if kind == FlowKind::Bn {
        let inv0 = invert(m0)?;
        let inv_t = &delta + (inv0 - &delta) * (-t).exp();
        return Ok(invert(&inv_t)?);
    }
    let star = invert(&delta)?;
    let e0 = m0 - &star;
    let relaxed = match kind {
        FlowKind::Forward => (&delta * -t).exp() * e0,
        FlowKind::Backward => e0 * (&delta * -t).exp(),
        _ => {
            let half = (&delta * (-t / 2.0)).exp();
            &half * e0 * &half
        }
    };
    Ok(star + relaxed)
}

/// Error in the flow's own convention: Id − MΔ for BN, M − Δ⁻¹ otherwise.
pub fn error_matrix(kind: FlowKind, m: &Mat, delta: &Mat, delta_inv: &Mat) -> Mat {
    match kind {
        FlowKind::Bn => Mat::identity(m.nrows(), m.nrows()) - m * delta,
        _ => m - delta_inv,
    }
}

/// P_t defined by γP_t = Id − M⁻¹.
pub fn implied_transition(m: &Mat, gamma: f64) -> Result<Mat> {
    let n = m.nrows();
    Ok((Mat::identity(n, n) - invert(m)?) / gamma)
}

/// Random walk on the discrete torus {0, …, n−1}: ±1 with probability ½ each.
pub fn torus(n: usize, gamma: f64) -> Result<FiniteMrp> {
    if n == 0 {
        return Err(DynamicsError::Shape("torus needs at least one state".into()));
    }
    let mut p = Mat::zeros(n, n);
    for i in 0..n {
        p[(i, (i + 1) % n)] += 0.5;
        p[(i, (i + n - 1) % n)] += 0.5;
    }
    Ok(FiniteMrp::new(p, Vector::zeros(n), gamma)?)
}
