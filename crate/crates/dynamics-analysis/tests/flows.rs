use dynamics_analysis::*;
use mrp_core::{invert, random_mrp, stream_rng, FiniteMrp, Mat};
use nalgebra::Complex;
use proptest::prelude::*;

fn random_env(states: usize, gamma: f64, seed: u64) -> FiniteMrp {
    random_mrp(states, 0.5, gamma, &mut stream_rng(seed, 0)).unwrap()
}

fn star(mrp: &FiniteMrp) -> Mat {
    invert(&mrp.laplacian()).unwrap()
}

#[test]
fn linear_flows_match_closed_forms() {
    let mrp = random_env(6, 0.8, 1);
    let m0 = Mat::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.2 - 0.3);
    for kind in [FlowKind::Forward, FlowKind::Backward, FlowKind::Mixed] {
        let traj = integrate_flow(kind, &mrp, &m0, 4.0, 1e-3).unwrap();
        for st in &traj.states {
            let want = closed_form(kind, &mrp, &m0, st.time).unwrap();
            assert!((&st.m - want).amax() < 1e-6, "{kind:?} at t = {}", st.time);
        }
    }
}

#[test]
fn bn_flow_from_identity_matches_closed_form() {
    for mrp in [torus(8, 0.9).unwrap(), random_env(5, 0.7, 2)] {
        let id = Mat::identity(mrp.num_states(), mrp.num_states());
        let traj = integrate_flow(FlowKind::Bn, &mrp, &id, 6.0, 1e-3).unwrap();
        let gp = mrp.transition() * mrp.discount();
        for st in &traj.states {
            let want = closed_form(FlowKind::Bn, &mrp, &id, st.time).unwrap();
            assert!((&st.m - &want).amax() < 1e-6);
            // P₀ = 0: M_t = (Id − γP + γe^{−t}P)⁻¹
            let direct = invert(&(&id - &gp * (1.0 - (-st.time).exp()))).unwrap();
            assert!((&st.m - direct).amax() < 1e-6);
        }
        // with the opposite sign on the e^{−t} term the formula misses the flow
        let t = 1.0;
        let flipped = invert(&(&id - &gp * (1.0 + (-t as f64).exp()))).unwrap();
        let at_one = &traj.states.iter().find(|s| (s.time - t).abs() < 1e-9).unwrap().m;
        assert!((at_one - flipped).amax() > 1e-2);
    }
}

#[test]
fn bn_change_of_variables_is_a_straight_line() {
    let mrp = random_env(5, 0.9, 3);
    let gamma = mrp.discount();
    // M₀ = successor matrix of another process, so P₀ is that process's kernel
    let other = random_env(5, 0.9, 4);
    let m0 = star(&other);
    let traj = integrate_flow(FlowKind::Bn, &mrp, &m0, 5.0, 1e-3).unwrap();
    for st in &traj.states {
        let pt = implied_transition(&st.m, gamma).unwrap();
        let want = mrp.transition() + (other.transition() - mrp.transition()) * (-st.time).exp();
        assert!((pt - want).amax() < 1e-6);
    }
}

#[test]
fn fixed_point_does_not_drift() {
    let mrp = random_env(4, 0.9, 5);
    let m = star(&mrp);
    let opts = FlowOptions { step: 1e-3, record_every: 10_000, ..FlowOptions::default() };
    for kind in FlowKind::ALL {
        let traj = integrate_flow_with(kind, &mrp, &m, 100.0, opts).unwrap();
        assert!(traj.states.iter().all(|s| (&s.m - &m).amax() < 1e-9), "{kind:?}");
    }
}

fn numerical_rank(m: &Mat) -> usize {
    m.singular_values().iter().filter(|&&s| s > 1e-10).count()
}

#[test]
fn bn_flow_preserves_rank() {
    let mrp = random_env(6, 0.8, 6);
    let u = Mat::from_fn(6, 2, |i, j| (i as f64 + 1.0) * if j == 0 { 0.1 } else { -0.05 * i as f64 });
    let proj = &u * (u.transpose() * &u).try_inverse().unwrap() * u.transpose();
    let m0 = star(&mrp) * proj;
    assert_eq!(numerical_rank(&m0), 2);
    let traj = integrate_flow(FlowKind::Bn, &mrp, &m0, 10.0, 1e-3).unwrap();
    assert!(traj.states.iter().all(|s| numerical_rank(&s.m) == 2));
}

#[test]
fn torus_spectrum() {
    for gamma in [0.5, 0.9] {
        let n = 8;
        let d = spectral_error(FlowKind::Forward, &torus(n, gamma).unwrap(), &Mat::zeros(n, n)).unwrap();
        let mut got: Vec<f64> = d.eigenvalues.iter().map(|z| z.re).collect();
        got.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = (0..n)
            .map(|k| (1.0 - gamma) + 2.0 * gamma * (std::f64::consts::PI * k as f64 / n as f64).sin().powi(2))
            .collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9);
        }
        assert!(d.eigenvalues.iter().all(|z| z.im.abs() < 1e-9));
    }
}

#[test]
fn slow_mode_multiplicity_drops_from_n_to_one() {
    let n = 8;
    for gamma in [0.5, 0.9] {
        let mrp = torus(n, gamma).unwrap();
        let e0 = -star(&mrp);
        let fwd = spectral_error(FlowKind::Forward, &mrp, &e0).unwrap();
        let bwd = spectral_error(FlowKind::Backward, &mrp, &e0).unwrap();
        let mix = spectral_error(FlowKind::Mixed, &mrp, &e0).unwrap();
        assert_eq!(fwd.count_modes(1.0 - gamma, 1e-9), n);
        assert_eq!(bwd.count_modes(1.0 - gamma, 1e-9), n);
        assert_eq!(mix.count_modes(1.0 - gamma, 1e-9), 1);
        assert!(mix.mixed_rates_dominate());
    }
}

#[test]
fn predictors_match_integrated_flows() {
    // non-symmetric kernel with complex eigenvalues
    let mrp = random_env(6, 0.9, 7);
    let d = mrp.laplacian().complex_eigenvalues();
    assert!(d.iter().any(|z| z.im.abs() > 1e-3), "want a complex spectrum");
    let m0 = Mat::zeros(6, 6);
    let e0 = &m0 - star(&mrp);
    for kind in [FlowKind::Forward, FlowKind::Backward, FlowKind::Mixed] {
        let dec = spectral_error(kind, &mrp, &e0).unwrap();
        assert!((dec.reconstruct() - &e0).amax() < 1e-8);
        assert!(dec.eigenvalues.iter().all(|z| z.re >= 1.0 - 0.9 - 1e-12));
        let traj = integrate_flow(kind, &mrp, &m0, 8.0, 1e-3).unwrap();
        for st in traj.states.iter().step_by(5) {
            let e = &st.m - star(&mrp);
            assert!((dec.predict(st.time) - e).amax() < 1e-5, "{kind:?} t = {}", st.time);
        }
    }
}

#[test]
fn single_dyad_decays_as_one_exponential() {
    let mrp = random_env(5, 0.8, 8);
    let base = spectral_error(FlowKind::Forward, &mrp, &Mat::zeros(5, 5)).unwrap();
    // real eigenpairs only, so the dyad is a real matrix
    let real: Vec<usize> = (0..5).filter(|&i| base.eigenvalues[i].im.abs() < 1e-12).collect();
    let (i, j) = (real[0], *real.last().unwrap());
    let ui = base.right_vectors.column(i).map(|z| z.re);
    let vj = base.left_vectors.row(j).map(|z| z.re);
    let dyad = &ui * &vj;
    let (li, lj) = (base.eigenvalues[i].re, base.eigenvalues[j].re);
    for (kind, rate) in [(FlowKind::Forward, li), (FlowKind::Backward, lj), (FlowKind::Mixed, (li + lj) / 2.0)] {
        let dec = spectral_error(kind, &mrp, &dyad).unwrap();
        for t in [0.5, 2.0, 5.0] {
            assert!((dec.predict(t) - &dyad * (-rate * t).exp()).amax() < 1e-9);
        }
        let m0 = star(&mrp) + &dyad;
        let traj = integrate_flow(kind, &mrp, &m0, 3.0, 1e-3).unwrap();
        let e = &traj.last().m - star(&mrp);
        assert!((e - &dyad * (-rate * 3.0).exp()).amax() < 1e-8);
    }
}

#[test]
fn bn_flow_follows_scalar_solutions() {
    let mrp = torus(6, 0.9).unwrap();
    let delta = mrp.laplacian();
    let m0 = Mat::identity(6, 6) * 0.5;
    let e0 = Mat::identity(6, 6) - &m0 * &delta;
    let traj = integrate_flow(FlowKind::Bn, &mrp, &m0, 5.0, 1e-3).unwrap();
    for st in traj.states.iter().step_by(7) {
        let e = Mat::identity(6, 6) - &st.m * &delta;
        assert!((bn_error_predict(&e0, st.time).unwrap() - e).amax() < 1e-6);
    }
}

#[test]
fn bn_flow_blows_up_on_the_half_line() {
    // E₀ = 2·Id: every error eigenvalue starts at 2, so M₀ = −Δ⁻¹
    let mrp = torus(4, 0.5).unwrap();
    let m0 = -star(&mrp);
    match integrate_flow(FlowKind::Bn, &mrp, &m0, 2.0, 1e-3) {
        Err(DynamicsError::BlowUp { time, .. }) => assert!(time < 2f64.ln() && time > 0.6, "{time}"),
        other => panic!("expected blow-up, got {:?}", other.map(|t| t.last().time)),
    }
    assert!(matches!(bn_error_predict(&Mat::identity(4, 4), 1.0), Ok(_)));
    assert!(matches!(bn_error_predict(&(Mat::identity(4, 4) * 2.0), 1.0), Err(DynamicsError::BlowUp { .. })));
    assert_eq!(integrate_scalar_bn(Complex::new(0.0, 0.0), 3.0, 1e-3).unwrap(), BnScalarOutcome::Finite(Complex::new(0.0, 0.0)));
}

#[test]
fn stochastic_inits_never_diverge() {
    // M₀ = successor matrix of any process: E₀ = γ(P − P₀)·… has no eigenvalue on (1, ∞)
    let mrp = random_env(5, 0.9, 9);
    for seed in 0..20 {
        let other = random_env(5, 0.9, 100 + seed);
        let e0 = Mat::identity(5, 5) - star(&other) * mrp.laplacian();
        assert!(e0.complex_eigenvalues().iter().all(|&l| bn_diverges(l).is_none()));
    }
    let f = divergence_frequency(&mrp, 500, 1.0, &mut stream_rng(1, 0));
    assert!(f > 0.0 && f < 1.0, "{f}");
    assert_eq!(f, divergence_frequency(&mrp, 500, 1.0, &mut stream_rng(1, 0)));
}

#[test]
fn td_and_bn_steps_certify_path_lengths() {
    let mrp = torus(8, 0.9).unwrap();
    let mut m = Mat::identity(8, 8);
    let mut got = Vec::new();
    for _ in 0..=4 {
        got.push(path_certificate_tol(&m, &mrp, 40, 1e-10).n);
        m = ssipe_newton::bn_step_exact(&m, &mrp, 1.0);
    }
    assert_eq!(got, vec![0, 1, 3, 7, 15]);
    for op in [tabular_learners::forward_operator, tabular_learners::backward_operator] {
        let mut m = Mat::identity(8, 8);
        let mut got = Vec::new();
        for _ in 0..=5 {
            let c = path_certificate_tol(&m, &mrp, 40, 1e-10);
            assert!(c.exact);
            got.push(c.n);
            m = op(&m, &mrp);
        }
        assert_eq!(got, vec![0, 1, 2, 3, 4, 5]);
    }
}

#[test]
fn fitted_rates() {
    let opts = FlowOptions { step: 1e-3, record_every: 100, ..FlowOptions::default() };
    for mrp in [torus(8, 0.5).unwrap(), torus(8, 0.9).unwrap(), random_env(10, 0.9, 10)] {
        let n = mrp.num_states();
        let gamma = mrp.discount();
        let (_, bn) = fit_flow_rate(FlowKind::Bn, &mrp, &Mat::identity(n, n), 40.0, opts).unwrap();
        assert!((bn.rate - 1.0).abs() < 0.05, "bn rate {}", bn.rate);
        let t_end = 12.0 / (1.0 - gamma);
        let (_, fwd) = fit_flow_rate(FlowKind::Forward, &mrp, &Mat::zeros(n, n), t_end, opts).unwrap();
        assert!((fwd.rate - (1.0 - gamma)).abs() < 0.05 * (1.0 - gamma), "forward rate {}", fwd.rate);
    }
}

#[test]
fn csv_and_json_outputs() {
    let mrp = torus(4, 0.5).unwrap();
    let (traj, fit) = fit_flow_rate(FlowKind::Bn, &mrp, &Mat::identity(4, 4), 30.0, FlowOptions::default()).unwrap();
    let rows = trajectory_rows(&traj, &mrp, Some(fit.rate)).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,frob_error,tv_error,fitted_rate\n"));
    assert_eq!(text.lines().count(), rows.len() + 1);

    let dec = spectral_error(FlowKind::Mixed, &mrp, &(-star(&mrp))).unwrap();
    let report = SpectralReport::new(&dec, 1e-9);
    assert_eq!(report.slow_mode_multiplicity, 1);
    let mut buf = Vec::new();
    write_spectral_json(&mut buf, &report).unwrap();
    let back: SpectralReport = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, report);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mixed_never_slower_than_both_sides(seed in 0u64..10_000, gamma in 0.1f64..0.99) {
        let mrp = random_env(5, gamma, seed);
        if let Ok(d) = spectral_error(FlowKind::Mixed, &mrp, &Mat::zeros(5, 5)) {
            prop_assert!(d.mixed_rates_dominate());
            prop_assert!((d.slowest_rate() - (1.0 - gamma)).abs() < 1e-9);
        }
    }

    #[test]
    fn forward_closed_form_agrees(seed in 0u64..10_000, t in 0.1f64..3.0) {
        let mrp = random_env(4, 0.8, seed);
        let m0 = Mat::from_fn(4, 4, |i, j| ((seed as usize + i * 5 + j) % 7) as f64 / 7.0);
        let opts = FlowOptions { step: 1e-3, record_every: usize::MAX, ..FlowOptions::default() };
        let traj = integrate_flow_with(FlowKind::Forward, &mrp, &m0, t, opts).unwrap();
        let want = closed_form(FlowKind::Forward, &mrp, &m0, traj.last().time).unwrap();
        prop_assert!((&traj.last().m - want).amax() < 1e-6);
    }
}
