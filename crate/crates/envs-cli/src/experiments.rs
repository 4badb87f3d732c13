use std::collections::VecDeque;

use dynamics_analysis::{
    error_series, integrate_flow_with, rate_fit, spectral_error, trajectory_rows, FlowKind, FlowOptions, SpectralReport,
};
use fb_lowrank::{classify_fixed_point, converge_exact, FbModel, FbVariant};
use goal_values::{dyadic_mass_closed_form, root_mass_profile, run_goal_grid, GoalGridConfig, GoalSampling};
use mrp_core::{
    invert, stationary_distribution, stream_rng, successor_exact, tv_norm, value_exact, FiniteMrp, Mat, RewardNoise,
    StateDistribution, TransitionSampler, Vector,
};
use rand::Rng;
use ssipe_newton::{bn_step_exact, run_trials};
use tabular_learners::{
    backward_operator, forward_operator, forward_td_row, relative_successor_exact, relative_td_v_expected, td0_v,
    td_lambda_v, thm25_harness, trace_expectation_monte_carlo, trajectory_burn_in, EligibilityTrace, Schedule,
};

use crate::config::{ExperimentConfig, ExperimentKind, LearnerSpec};
use crate::env::{build_env, Env, EnvSpec};
use crate::error::{LabError, Result};
use crate::table::{Cell, Table};

/// Which columns to draw against which.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: &'static str,
    pub ys: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutput {
    pub table: Table,
    pub plot: Option<PlotSpec>,
    /// Additional artifacts as (file suffix, contents).
    pub extras: Vec<(String, String)>,
}

impl SeedOutput {
    fn new(table: Table, plot: Option<PlotSpec>) -> Self {
        Self { table, plot, extras: Vec::new() }
    }
}

fn plot(x: &'static str, ys: &[&'static str]) -> Option<PlotSpec> {
    Some(PlotSpec { x, ys: ys.to_vec() })
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidConfig(msg.into())
}

/// Runs one seed of the configured experiment.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutput> {
    let env = build_env(&cfg.env)?;
    match cfg.experiment {
        ExperimentKind::TdConvergence => td_convergence(cfg, &process(cfg, &env)?, seed),
        ExperimentKind::SsipeBound => ssipe_bound(cfg, &process(cfg, &env)?, seed),
        ExperimentKind::BnPathlen => bn_pathlen(cfg, &process(cfg, &env)?),
        ExperimentKind::FbFixedpoint => fb_fixedpoint(cfg, &process(cfg, &env)?, seed),
        ExperimentKind::FlowRates => flow_rates(cfg, &process(cfg, &env)?, seed),
        ExperimentKind::GoalGrid => goal_grid(cfg, seed),
        ExperimentKind::TraceEquivalence => trace_equivalence(cfg, &process(cfg, &env)?, seed),
        ExperimentKind::Thm25 => thm25(cfg, &process(cfg, &env)?, seed),
        ExperimentKind::RelativeTd => relative_td(cfg, &process(cfg, &env)?, seed),
        ExperimentKind::DyadicMass => dyadic_mass(cfg, &env),
    }
}

/// The env as a reward process, with the configured reward noise.
fn process(cfg: &ExperimentConfig, env: &Env) -> Result<FiniteMrp> {
    let mrp = env.to_mrp()?;
    match cfg.params.reward_noise {
        Some(w) if w > 0.0 => Ok(mrp.clone().with_noise(Vector::from_element(mrp.num_states(), w), RewardNoise::Uniform)?),
        _ => Ok(mrp),
    }
}

fn rho_for(cfg: &ExperimentConfig, mrp: &FiniteMrp, default: &str) -> Result<StateDistribution> {
    match cfg.params.rho.as_deref().unwrap_or(default) {
        "uniform" => Ok(StateDistribution::uniform(mrp.num_states())),
        "stationary" => Ok(stationary_distribution(mrp)?),
        other => Err(invalid(format!("unknown rho {other:?}"))),
    }
}

fn discounted(mrp: &FiniteMrp, what: ExperimentKind) -> Result<()> {
    if mrp.discount() < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{what} needs gamma < 1")))
    }
}

/// True at 0 and every `steps / checkpoints`-th step, and at the last one.
fn checkpoint(cfg: &ExperimentConfig, k: u64) -> bool {
    let stride = (cfg.steps / cfg.params.checkpoints.unwrap_or(100).max(1)).max(1);
    k % stride == 0 || k == cfg.steps
}

fn td_convergence(cfg: &ExperimentConfig, mrp: &FiniteMrp, seed: u64) -> Result<SeedOutput> {
    discounted(mrp, cfg.experiment)?;
    let learner = cfg.learner.clone().unwrap_or(LearnerSpec { schedule: Schedule::Harmonic { c: 50.0 }, lambda: 0.0, horizon: 1 });
    if learner.horizon > 1 && learner.lambda > 0.0 {
        return Err(invalid("td-convergence takes either horizon > 1 or lambda > 0, not both"));
    }
    let n = mrp.num_states();
    let gamma = mrp.discount();
    let rho = StateDistribution::uniform(n);
    let star = successor_exact(mrp)?;
    let v_star = value_exact(mrp)?;
    let sampler = TransitionSampler::new(mrp, &rho);
    let mut rng = stream_rng(seed, 0);
    let (mut m, mut v) = (Mat::zeros(n, n), Vector::zeros(n));
    let mut visits = vec![0u64; n];
    let mut trace = EligibilityTrace::new(n);
    let mut window: VecDeque<(usize, f64)> = VecDeque::new();
    let mut table = Table::new(cfg.experiment);
    let mut record = |k: u64, m: &Mat, v: &Vector| {
        table.push(vec![k.into(), tv_norm(m, &star, &rho).into(), (v - &v_star).amax().into()]);
    };
    record(0, &m, &v);
    let mut s = sampler.sample_state(&mut rng);
    for k in 1..=cfg.steps {
        let t = sampler.step(s, &mut rng);
        if learner.horizon == 1 {
            let eta = learner.schedule.at(visits[s]);
            visits[s] += 1;
            forward_td_row(&mut m, &t, gamma, eta);
            if learner.lambda > 0.0 {
                td_lambda_v(&mut v, &mut trace, &t, gamma, learner.lambda, eta);
            } else {
                td0_v(&mut v, &t, gamma, eta);
            }
        } else {
            window.push_back((s, t.reward));
            if t.terminal {
                while !window.is_empty() {
                    n_step_update(&mut m, &mut v, &mut window, None, gamma, &learner.schedule, &mut visits);
                }
            } else if window.len() == learner.horizon {
                n_step_update(&mut m, &mut v, &mut window, Some(t.to_state), gamma, &learner.schedule, &mut visits);
            }
        }
        s = if t.terminal { sampler.sample_state(&mut rng) } else { t.to_state };
        if checkpoint(cfg, k) {
            record(k, &m, &v);
        }
    }
    Ok(SeedOutput::new(table, plot("step", &["tv_error_m", "value_error"])))
}

/// Updates the oldest state of the window towards its truncated return,
/// bootstrapping from `boot` when given.
fn n_step_update(
    m: &mut Mat,
    v: &mut Vector,
    window: &mut VecDeque<(usize, f64)>,
    boot: Option<usize>,
    gamma: f64,
    schedule: &Schedule,
    visits: &mut [u64],
) {
    let n = m.ncols();
    let s0 = window[0].0;
    let mut row = Vector::zeros(n);
    let (mut ret, mut g) = (0.0, 1.0);
    for &(s, r) in window.iter() {
        row[s] += g;
        ret += g * r;
        g *= gamma;
    }
    if let Some(b) = boot {
        row += m.row(b).transpose() * g;
        ret += g * v[b];
    }
    let eta = schedule.at(visits[s0]);
    visits[s0] += 1;
    let current = m.row(s0).transpose();
    m.set_row(s0, &((&current + (row - &current) * eta).transpose()));
    v[s0] += eta * (ret - v[s0]);
    window.pop_front();
}

fn ssipe_bound(cfg: &ExperimentConfig, mrp: &FiniteMrp, seed: u64) -> Result<SeedOutput> {
    discounted(mrp, cfg.experiment)?;
    let rho = rho_for(cfg, mrp, "uniform")?;
    let trials = cfg.params.trials.unwrap_or(20);
    let results = run_trials(mrp, &rho, cfg.steps, cfg.params.delta.unwrap_or(0.05), trials, seed)?;
    let mut table = Table::new(cfg.experiment);
    for r in &results {
        table.push(vec![
            r.trial_id.into(),
            r.t.into(),
            r.tv_error_m.into(),
            r.rho_error_v.into(),
            r.m_bound.into(),
            r.v_bound.into(),
            (r.tv_error_m <= r.m_bound && r.rho_error_v <= r.v_bound).into(),
        ]);
    }
    Ok(SeedOutput::new(table, plot("trial_id", &["tv_error_m", "m_bound", "rho_error_v", "v_bound"])))
}

fn bn_pathlen(cfg: &ExperimentConfig, mrp: &FiniteMrp) -> Result<SeedOutput> {
    let n = mrp.num_states();
    let eta = cfg.params.eta.unwrap_or(1.0);
    let tol = cfg.params.tolerance.unwrap_or(1e-10);
    let max_n = 1usize << cfg.steps;
    let certify = |m: &Mat| dynamics_analysis::path_certificate_tol(m, mrp, max_n, tol);
    let id = Mat::identity(n, n);
    let (mut bn, mut fwd, mut bwd) = (id.clone(), id.clone(), id);
    let mut table = Table::new(cfg.experiment);
    for step in 0..=cfg.steps {
        if step > 0 {
            bn = bn_step_exact(&bn, mrp, eta);
            fwd = forward_operator(&fwd, mrp);
            bwd = backward_operator(&bwd, mrp);
        }
        let c = certify(&bn);
        let length = |m: &Mat| {
            let c = certify(m);
            if c.exact {
                c.n as i64
            } else {
                -1
            }
        };
        table.push(vec![
            step.into(),
            Cell::Int(if c.exact { c.n as i64 } else { -1 }),
            c.exact.into(),
            length(&fwd).into(),
            length(&bwd).into(),
        ]);
    }
    Ok(SeedOutput::new(table, plot("step", &["n", "n_forward", "n_backward"])))
}

fn fb_fixedpoint(cfg: &ExperimentConfig, mrp: &FiniteMrp, seed: u64) -> Result<SeedOutput> {
    discounted(mrp, cfg.experiment)?;
    let name = cfg.params.variant.as_deref().unwrap_or("fb");
    let variant = FbVariant::parse(name).ok_or_else(|| invalid(format!("unknown FB variant {name:?}")))?;
    let rank = cfg.params.rank.unwrap_or(2);
    let rho = rho_for(cfg, mrp, "stationary")?;
    let mut model = FbModel::random(rank, rho, &mut stream_rng(seed, 0))?;
    let conv = converge_exact(
        &mut model,
        mrp,
        variant,
        cfg.params.eta.unwrap_or(0.5),
        cfg.steps as usize,
        cfg.params.tolerance.unwrap_or(1e-10),
        100,
    );
    let mut row: Vec<Cell> = vec![variant.name().into(), rank.into(), conv.steps.into(), conv.converged.into()];
    if conv.converged {
        let r = classify_fixed_point(&model, mrp, variant, 1e-8, 1e-6)?;
        row.extend([
            r.fixed_point_residual.into(),
            r.svd_residuals[0].into(),
            r.svd_residuals[1].into(),
            r.svd_holds.into(),
            r.stability_residual.into(),
            r.stability_holds.into(),
            r.projection_residual.into(),
            r.projection_holds.into(),
            r.weak_inverse_residual.into(),
            r.weak_inverse_holds.into(),
        ]);
    } else {
        let nan = || Cell::Float(f64::NAN);
        row.extend([conv.residual.into(), nan(), nan(), false.into()]);
        for _ in 0..3 {
            row.extend([nan(), false.into()]);
        }
    }
    let mut table = Table::new(cfg.experiment);
    table.push(row);
    Ok(SeedOutput::new(table, None))
}

fn flow_rates(cfg: &ExperimentConfig, mrp: &FiniteMrp, seed: u64) -> Result<SeedOutput> {
    discounted(mrp, cfg.experiment)?;
    let name = cfg.params.flow.as_deref().unwrap_or("bn");
    let kind: FlowKind = name.parse().map_err(invalid)?;
    let n = mrp.num_states();
    let init = cfg.params.init.as_deref().unwrap_or(if kind == FlowKind::Bn { "identity" } else { "zero" });
    let m0 = match init {
        "identity" => Mat::identity(n, n),
        "zero" => Mat::zeros(n, n),
        "random" => {
            let mut rng = stream_rng(seed, 0);
            Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0))
        }
        other => return Err(invalid(format!("unknown init {other:?}"))),
    };
    let dt = cfg.params.dt.unwrap_or(1e-2);
    let t_end = cfg.params.t_end.unwrap_or(cfg.steps as f64 * dt);
    let nominal = (t_end / dt).round().max(1.0) as u64;
    let record_every = (nominal / cfg.params.checkpoints.unwrap_or(200).max(1)).max(1) as usize;
    let opts = FlowOptions { step: dt, record_every, ..FlowOptions::default() };
    let traj = integrate_flow_with(kind, mrp, &m0, t_end, opts)?;
    let rate = rate_fit(&error_series(&traj, mrp)?).ok().map(|f| f.rate);
    let mut table = Table::new(cfg.experiment);
    for r in trajectory_rows(&traj, mrp, rate)? {
        table.push(vec![r.t.into(), r.frob_error.into(), r.tv_error.into(), r.fitted_rate.unwrap_or(f64::NAN).into()]);
    }
    let mut out = SeedOutput::new(table, plot("t", &["frob_error", "tv_error"]));
    if kind != FlowKind::Bn {
        let e0 = &m0 - invert(&mrp.laplacian())?;
        if let Ok(dec) = spectral_error(kind, mrp, &e0) {
            let report = SpectralReport::new(&dec, cfg.params.tolerance.unwrap_or(1e-9));
            out.extras.push(("spectrum.json".into(), serde_json::to_string_pretty(&report)? + "\n"));
        }
    }
    Ok(out)
}

fn goal_grid(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutput> {
    let EnvSpec::Gridworld { width, height, obstacles, gamma } = &cfg.env else {
        return Err(invalid("goal-grid needs a gridworld env"));
    };
    let goal_sampling = match cfg.params.goal_sampling.as_deref().unwrap_or("systematic") {
        "iid" => GoalSampling::Iid,
        "stratified" => GoalSampling::Stratified,
        "systematic" => GoalSampling::Systematic,
        other => return Err(invalid(format!("unknown goal sampling {other:?}"))),
    };
    let defaults = GoalGridConfig::default();
    let gc = GoalGridConfig {
        width: *width,
        height: *height,
        obstacles: obstacles.clone(),
        gamma: *gamma,
        samples: cfg.steps as usize,
        epsilon: cfg.params.epsilon.unwrap_or(defaults.epsilon),
        goal_sampling,
        goals_per_sample: cfg.params.goals_per_sample.unwrap_or(defaults.goals_per_sample),
        ..defaults
    };
    let r = run_goal_grid(&gc, seed)?;
    let mut table = Table::new(cfg.experiment);
    table.push(vec![
        gc.samples.into(),
        r.optimal_path_fraction.into(),
        r.pairs.into(),
        r.max_q_error.into(),
        r.max_value_error.into(),
    ]);
    Ok(SeedOutput::new(table, None))
}

fn trace_equivalence(cfg: &ExperimentConfig, mrp: &FiniteMrp, seed: u64) -> Result<SeedOutput> {
    let lambda = cfg.learner.as_ref().map_or(1.0, |l| l.lambda);
    let decay = mrp.discount() * lambda;
    if decay >= 1.0 {
        return Err(invalid("trace-equivalence needs gamma * lambda < 1"));
    }
    let rho = rho_for(cfg, mrp, "stationary")?;
    rho.require_positive()?;
    let sampler = TransitionSampler::new(mrp, &rho);
    let burn_in = cfg.params.burn_in.unwrap_or_else(|| trajectory_burn_in(decay));
    let batches = cfg.params.batches.unwrap_or(20).max(2);
    let est = trace_expectation_monte_carlo(&sampler, decay, cfg.steps as usize, burn_in, batches, &mut stream_rng(seed, 0));
    let m = successor_exact(&mrp.clone().with_discount(decay)?)?;
    let n = mrp.num_states();
    let mut table = Table::new(cfg.experiment);
    for s in 0..n {
        for st in 0..n {
            let formula = m[(st, s)] * rho.get(st) / rho.get(s);
            let (mean, se) = (est.mean[(s, st)], est.std_error[(s, st)]);
            let gap = (mean - formula).abs();
            let z = if se > 0.0 {
                gap / se
            } else if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            table.push(vec![s.into(), st.into(), mean.into(), se.into(), formula.into(), z.into()]);
        }
    }
    Ok(SeedOutput::new(table, None))
}

fn thm25(cfg: &ExperimentConfig, mrp: &FiniteMrp, seed: u64) -> Result<SeedOutput> {
    let eta = cfg.params.eta.unwrap_or(0.3);
    let rep = thm25_harness(mrp, cfg.steps as usize, eta, cfg.params.tolerance.unwrap_or(1e-12), &mut stream_rng(seed, 0));
    let mut table = Table::new(cfg.experiment);
    for (k, d) in rep.deviations.iter().enumerate() {
        table.push(vec![(k + 1).into(), (*d).into()]);
    }
    Ok(SeedOutput::new(table, plot("step", &["max_deviation"])))
}

fn relative_td(cfg: &ExperimentConfig, mrp: &FiniteMrp, seed: u64) -> Result<SeedOutput> {
    let schedule = cfg.learner.as_ref().map_or(Schedule::Constant { eta: 0.1 }, |l| l.schedule);
    let n = mrp.num_states();
    let gamma = mrp.discount();
    let rho_rel = rho_for(cfg, mrp, "uniform")?;
    let target = relative_successor_exact(mrp, &rho_rel)? * mrp.reward_mean();
    let sampler = TransitionSampler::new(mrp, &StateDistribution::uniform(n));
    let mut rng = stream_rng(seed, 0);
    let (mut v_rel, mut v_td) = (Vector::zeros(n), Vector::zeros(n));
    let mut visits = vec![0u64; n];
    let mut table = Table::new(cfg.experiment);
    table.push(vec![Cell::Int(0), (&v_rel - &target).amax().into(), v_td.amax().into()]);
    let mut s = sampler.sample_state(&mut rng);
    for k in 1..=cfg.steps {
        let t = sampler.step(s, &mut rng);
        let eta = schedule.at(visits[s]);
        visits[s] += 1;
        relative_td_v_expected(&mut v_rel, &t, &rho_rel, gamma, eta);
        td0_v(&mut v_td, &t, gamma, eta);
        s = if t.terminal { sampler.sample_state(&mut rng) } else { t.to_state };
        if checkpoint(cfg, k) {
            table.push(vec![k.into(), (&v_rel - &target).amax().into(), v_td.amax().into()]);
        }
    }
    Ok(SeedOutput::new(table, plot("step", &["relative_error", "td0_norm"])))
}

fn dyadic_mass(cfg: &ExperimentConfig, env: &Env) -> Result<SeedOutput> {
    let (Env::Mdp(mdp), EnvSpec::DyadicTree { depth, .. }) = (env, &cfg.env) else {
        return Err(invalid("dyadic-mass needs a dyadic_tree env"));
    };
    let t_max = cfg.steps as usize;
    let profile = root_mass_profile(mdp, 0, 0, t_max);
    let mut table = Table::new(cfg.experiment);
    for t in 0..t_max {
        let mass = profile[t + 1];
        let closed = dyadic_mass_closed_form(mdp.discount(), *depth, t);
        table.push(vec![t.into(), mass.into(), closed.into(), (mass - closed).abs().into()]);
    }
    Ok(SeedOutput::new(table, plot("t", &["mass", "closed_form"])))
}
