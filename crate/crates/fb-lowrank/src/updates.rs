//! Tabular FB updates. Exact forms are the expectations of the sampled ones
//! over s ∼ ρ, s' ∼ P.

use mrp_core::{FiniteMrp, Mat, TransitionSample};

use crate::model::{FbModel, FbVariant, Rule};

/// Expected (δF, δB) of a variant.
pub fn fb_exact_update(model: &FbModel, mrp: &FiniteMrp, variant: FbVariant) -> (Mat, Mat) {
    let rho = model.rho.diag();
    let delta = mrp.laplacian();
    let (f, b) = (&model.f, &model.b);
    let df = match variant.f_rule {
        Rule::Forward => b * &rho - model.sigma_b() * f * delta.transpose() * &rho,
        Rule::Backward => b * &rho - b * delta.transpose() * &rho * b.transpose() * f * &rho,
    };
    let db = match variant.b_rule {
        Rule::Forward => f * &rho - f * &rho * &delta * f.transpose() * b * &rho,
        Rule::Backward => f * &rho - model.sigma_f() * b * &rho * &delta,
    };
    (df, db)
}

/// Largest entry of the exact update, the fixed-point residual.
pub fn fb_residual(model: &FbModel, mrp: &FiniteMrp, variant: FbVariant) -> f64 {
    let (df, db) = fb_exact_update(model, mrp, variant);
    df.amax().max(db.amax())
}

/// F += ηδF, B += ηδB with the exact update.
pub fn fb_td_step_exact(model: &mut FbModel, mrp: &FiniteMrp, variant: FbVariant, eta: f64) {
    let (df, db) = fb_exact_update(model, mrp, variant);
    model.f += df * eta;
    model.b += db * eta;
}

/// Second-moment matrices the sampled updates need.
#[derive(Debug, Clone, PartialEq)]
pub struct FbStats {
    pub sigma_b: Mat,
    pub sigma_f: Mat,
    pub d_f: Mat,
    pub d_b: Mat,
    /// BN-FB's D = E[B(s)(γF(s') − F(s))ᵀ]
    pub d_bn: Mat,
}

pub const EMA_DECAY: f64 = 0.99;
pub const WARM_UP: usize = 100;

impl FbStats {
    pub fn exact(model: &FbModel, mrp: &FiniteMrp) -> Self {
        Self {
            sigma_b: model.sigma_b(),
            sigma_f: model.sigma_f(),
            d_f: model.d_f(mrp),
            d_b: model.d_b(mrp),
            d_bn: model.d_bn(mrp),
        }
    }

    /// Single-transition estimates (s ∼ ρ stands in for s₁, s₂ ∼ ρ).
    pub fn from_sample(model: &FbModel, t: &TransitionSample, gamma: f64) -> Self {
        let s = t.from_state;
        let g = t.continuation(gamma);
        let fs = model.f.column(s);
        let bs = model.b.column(s);
        let (mut f_gap, mut b_gap) = (-fs.into_owned(), -bs.into_owned());
        if g != 0.0 {
            f_gap.axpy(g, &model.f.column(t.to_state), 1.0);
            b_gap.axpy(g, &model.b.column(t.to_state), 1.0);
        }
        Self {
            sigma_b: bs * bs.transpose(),
            sigma_f: fs * fs.transpose(),
            d_f: fs * f_gap.transpose(),
            d_b: &b_gap * bs.transpose(),
            d_bn: bs * f_gap.transpose(),
        }
    }

    /// Mean of the single-transition estimates over a warm-up batch.
    pub fn warm_up(model: &FbModel, samples: &[TransitionSample], gamma: f64) -> Self {
        assert!(!samples.is_empty(), "warm-up needs at least one sample");
        let mut acc = Self::from_sample(model, &samples[0], gamma);
        for t in &samples[1..] {
            acc.blend(&Self::from_sample(model, t, gamma), 1.0);
        }
        acc.scale(1.0 / samples.len() as f64);
        acc
    }

    /// x ← decay·x + (1 − decay)·sample.
    pub fn ema_update(&mut self, model: &FbModel, t: &TransitionSample, gamma: f64, decay: f64) {
        self.scale(decay);
        self.blend(&Self::from_sample(model, t, gamma), 1.0 - decay);
    }

    fn scale(&mut self, a: f64) {
        for m in [&mut self.sigma_b, &mut self.sigma_f, &mut self.d_f, &mut self.d_b, &mut self.d_bn] {
            *m *= a;
        }
    }

    fn blend(&mut self, o: &Self, w: f64) {
        self.sigma_b += &o.sigma_b * w;
        self.sigma_f += &o.sigma_f * w;
        self.d_f += &o.d_f * w;
        self.d_b += &o.d_b * w;
        self.d_bn += &o.d_bn * w;
    }
}

/// Sampled update at one transition s → s', with the current state s reused
/// as the independent ρ-sample. All reads precede writes.
pub fn fb_td_step_sampled(model: &mut FbModel, variant: FbVariant, t: &TransitionSample, stats: &FbStats, gamma: f64, eta: f64) {
    let s = t.from_state;
    let g = t.continuation(gamma);
    let fs = model.f.column(s).into_owned();
    let bs = model.b.column(s).into_owned();
    let df_s = match variant.f_rule {
        Rule::Forward => {
            let mut gap = -&fs;
            if g != 0.0 {
                gap.axpy(g, &model.f.column(t.to_state), 1.0);
            }
            &bs + &stats.sigma_b * gap
        }
        Rule::Backward => &bs + &stats.d_b * &fs,
    };
    match variant.b_rule {
        Rule::Forward => {
            let db_s = &fs + &stats.d_f * &bs;
            let mut col = model.b.column_mut(s);
            col.axpy(eta, &db_s, 1.0);
        }
        Rule::Backward => {
            let push = &stats.sigma_f * &bs;
            let mut col = model.b.column_mut(s);
            col.axpy(eta, &(&fs - &push), 1.0);
            if g != 0.0 {
                let mut next = model.b.column_mut(t.to_state);
                next.axpy(eta * g, &push, 1.0);
            }
        }
    }
    let mut col = model.f.column_mut(s);
    col.axpy(eta, &df_s, 1.0);
}

/// Expected BN-FB update: δF = F − FΔᵀρ̂BᵀF, δB = B − Bρ̂ΔFᵀB.
pub fn fb_bn_update(model: &FbModel, mrp: &FiniteMrp) -> (Mat, Mat) {
    let rho = model.rho.diag();
    let delta = mrp.laplacian();
    let (f, b) = (&model.f, &model.b);
    let df = f - f * delta.transpose() * &rho * b.transpose() * f;
    let db = b - b * &rho * &delta * f.transpose() * b;
    (df, db)
}

pub fn fb_bn_step_exact(model: &mut FbModel, mrp: &FiniteMrp, eta: f64) {
    let (df, db) = fb_bn_update(model, mrp);
    model.f += df * eta;
    model.b += db * eta;
}

/// Sampled BN-FB at state s₁ ∼ ρ: F(s₁) += η(F(s₁) + DᵀF(s₁)), B(s₁) += η(B(s₁) + DB(s₁)).
/// `d` is either `FbStats::from_sample(..).d_bn` or a moving average.
pub fn fb_bn_step_sampled(model: &mut FbModel, s1: usize, d: &Mat, eta: f64) {
    let f1 = model.f.column(s1).into_owned();
    let b1 = model.b.column(s1).into_owned();
    let df = &f1 + d.transpose() * &f1;
    let db = &b1 + d * &b1;
    model.f.column_mut(s1).axpy(eta, &df, 1.0);
    model.b.column_mut(s1).axpy(eta, &db, 1.0);
}


/// Result of iterating exact updates to a fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub steps: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Euler steps of the exact update until the residual stays below `threshold`
/// for `consecutive` evaluations in a row.
pub fn converge_exact(
    model: &mut FbModel,
    mrp: &FiniteMrp,
    variant: FbVariant,
    eta: f64,
    max_steps: usize,
    threshold: f64,
    consecutive: usize,
) -> Convergence {
    let mut streak = 0;
    let mut residual = f64::INFINITY;
    for step in 0..max_steps {
        let (df, db) = fb_exact_update(model, mrp, variant);
        residual = df.amax().max(db.amax());
        if !residual.is_finite() {
            return Convergence { steps: step, residual, converged: false };
        }
        streak = if residual < threshold { streak + 1 } else { 0 };
        if streak >= consecutive {
            return Convergence { steps: step, residual, converged: true };
        }
        model.f += df * eta;
        model.b += db * eta;
    }
    Convergence { steps: max_steps, residual, converged: false }
}
