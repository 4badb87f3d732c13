//! Exact-summation oracles: expected updates are computed by enumerating the
//! finite sample space and weighting each applied update by its probability.

use mrp_core::*;
use proptest::prelude::*;
use tabular_learners::*;

fn random_process(states: usize, gamma: f64, seed: u64) -> (FiniteMrp, StateDistribution) {
    let mrp = random_mrp(states, 0.6, gamma, &mut stream_rng(seed, 0)).unwrap();
    let rho = stationary_distribution(&mrp).unwrap();
    (mrp, rho)
}

fn random_matrix(n: usize, seed: u64) -> Mat {
    use rand::Rng;
    let mut rng = stream_rng(seed, 77);
    Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
}

/// Σ_{s,s'} ρ_s P_{ss'} Σ_{x} ρ_x (update(m; s, s', x) − m)
fn expect_with_aux(
    m: &Mat,
    mrp: &FiniteMrp,
    rho: &StateDistribution,
    update: impl Fn(&mut Mat, &TransitionSample, usize),
) -> Mat {
    let n = mrp.num_states();
    let mut acc = Mat::zeros(n, n);
    for s in 0..n {
        for sp in 0..n {
            let p = mrp.transition()[(s, sp)];
            if p == 0.0 {
                continue;
            }
            for x in 0..n {
                let mut next = m.clone();
                update(&mut next, &TransitionSample::new(s, sp, 0.0), x);
                acc += (next - m) * (rho.get(s) * p * rho.get(x));
            }
        }
    }
    acc
}

/// Same with no auxiliary draw (the aux weights sum to one).
fn expect(m: &Mat, mrp: &FiniteMrp, rho: &StateDistribution, update: impl Fn(&mut Mat, &TransitionSample)) -> Mat {
    expect_with_aux(m, mrp, rho, |mm, t, _| update(mm, t))
}

#[test]
fn sampled_forward_expectation_matches_tabular_formula_and_vanishes_at_fixed_point() {
    let (mrp, rho) = random_process(5, 0.8, 1);
    let g = mrp.discount();
    let p = mrp.transition();
    let d = rho.diag();
    let m = random_matrix(5, 1);
    let got = expect_with_aux(&m, &mrp, &rho, |mm, t, s2| forward_td_sampled(mm, t, s2, g, 1.0));
    let want = &d * p * g + &d * (p * &m * g - &m) * &d;
    assert!((got - want).amax() < 1e-12);

    let m_star = density_from_successor(&successor_exact(&mrp).unwrap(), &rho);
    let at_star = expect_with_aux(&m_star, &mrp, &rho, |mm, t, s2| forward_td_sampled(mm, t, s2, g, 1.0));
    assert!(at_star.amax() < 1e-12);
}

#[test]
fn sampled_backward_vanishes_at_fixed_point() {
    let (mrp, rho) = random_process(5, 0.8, 2);
    let g = mrp.discount();
    let m_star = density_from_successor(&successor_exact(&mrp).unwrap(), &rho);
    let at_star = expect_with_aux(&m_star, &mrp, &rho, |mm, t, s1| backward_td_sampled(mm, t, s1, g, 1.0));
    assert!(at_star.amax() < 1e-12, "{}", at_star.amax());
    let off = &m_star + random_matrix(5, 2) * 0.1;
    let away = expect_with_aux(&off, &mrp, &rho, |mm, t, s1| backward_td_sampled(mm, t, s1, g, 1.0));
    assert!(away.amax() > 1e-4);
}

#[test]
fn backward_expectation_is_forward_on_reversed_process() {
    for seed in 0..5 {
        let (mrp, rho) = random_process(5, 0.7, 10 + seed);
        let back = backward_process(&mrp, &rho).unwrap();
        let g = mrp.discount();
        let m = random_matrix(5, seed);
        let bwd = expect_with_aux(&m, &mrp, &rho, |mm, t, s1| backward_td_sampled(mm, t, s1, g, 1.0));
        let m_t = m.transpose();
        let fwd = expect_with_aux(&m_t, &back, &rho, |mm, t, s2| forward_td_sampled(mm, t, s2, g, 1.0));
        assert!((bwd - fwd.transpose()).amax() < 1e-12);
    }
}

#[test]
fn full_matrix_expectations_match_closed_forms() {
    let (mrp, rho) = random_process(5, 0.9, 3);
    let g = mrp.discount();
    let m = random_matrix(5, 3);
    let fwd = expect(&m, &mrp, &rho, |mm, t| forward_td_row(mm, t, g, 1.0));
    assert!((fwd - expected_forward_row(&m, &mrp, &rho)).amax() < 1e-12);
    let bwd = expect(&m, &mrp, &rho, |mm, t| backward_td_column(mm, t, &rho, g, 1.0));
    assert!((bwd - expected_backward_column(&m, &mrp, &rho)).amax() < 1e-12);

    let star = successor_exact(&mrp).unwrap();
    assert!(expected_forward_row(&star, &mrp, &rho).amax() < 1e-12);
    assert!(expected_backward_column(&star, &mrp, &rho).amax() < 1e-12);
}

#[test]
fn multistep_expectation_vanishes_at_fixed_point() {
    let (mrp, rho) = random_process(4, 0.8, 4);
    let g = mrp.discount();
    let n = 4;
    let h = 3;
    let m_star = density_from_successor(&successor_exact(&mrp).unwrap(), &rho);
    let mut acc = Mat::zeros(n, n);
    // enumerate s0..s3 and the target
    for code in 0..n.pow(h as u32 + 1) {
        let path: Vec<usize> = (0..=h).map(|k| (code / n.pow(k as u32)) % n).collect();
        let mut w = rho.get(path[0]);
        for k in 0..h {
            w *= mrp.transition()[(path[k], path[k + 1])];
        }
        if w == 0.0 {
            continue;
        }
        for target in 0..n {
            let mut next = m_star.clone();
            multistep_td(&mut next, &path, target, g, 1.0);
            acc += (next - &m_star) * (w * rho.get(target));
        }
    }
    assert!(acc.amax() < 1e-12, "{}", acc.amax());
}

#[test]
fn linear_td_with_tabular_features_matches_tabular_density_update() {
    let (mrp, rho) = random_process(3, 0.7, 5);
    let g = mrp.discount();
    let n = 3;
    let theta0 = random_matrix(n, 5);
    let mut acc = Mat::zeros(n, n);
    for s in 0..n {
        for sp in 0..n {
            let p = mrp.transition()[(s, sp)];
            for s2 in 0..n {
                let mut model = LinearMModel::tabular(n);
                model.theta = Vector::from_iterator(n * n, theta0.transpose().iter().copied());
                linear_td_step(&mut model, &TransitionSample::new(s, sp, 0.0), s2, g, 1.0);
                acc += (model.model() - &theta0) * (rho.get(s) * p * rho.get(s2));
            }
        }
    }
    let d = rho.diag();
    let want = &d + &d * (mrp.transition() * &theta0 * g - &theta0) * &d;
    assert!((acc - want).amax() < 1e-12);
}

#[test]
fn linear_td_converges_with_features_spanning_the_solution() {
    let p = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let mrp = FiniteMrp::new(p, Vector::zeros(2), 0.5).unwrap();
    let rho = StateDistribution::uniform(2);
    let star = successor_exact(&mrp).unwrap();
    let swap = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let mut model = LinearMModel::new(vec![Mat::identity(2, 2), swap]);
    let mut rng = stream_rng(6, 0);
    let sampler = TransitionSampler::new(&mrp, &rho);
    let mut s = 0;
    for k in 0..200_000u64 {
        let t = sampler.step(s, &mut rng);
        let s2 = sampler.sample_state(&mut rng);
        linear_td_step(&mut model, &t, s2, 0.5, 100.0 / (1000.0 + k as f64) * 0.1);
        s = t.to_state;
    }
    let learned = model.model() * rho.diag();
    assert!((learned - star).amax() < 1e-2);
}

#[test]
fn mixed_expected_steps_track_mixed_flow() {
    let n = 6;
    let mut p = Mat::zeros(n, n);
    for i in 0..n {
        p[(i, (i + 1) % n)] = 0.5;
        p[(i, (i + n - 1) % n)] = 0.5;
    }
    let mrp = FiniteMrp::new(p, Vector::zeros(n), 0.8).unwrap();
    let rho = StateDistribution::uniform(n);
    let lap = mrp.laplacian();
    let lap_inv = successor_exact(&mrp).unwrap();
    let horizon = 2.0;
    let mut errors = Vec::new();
    for &eta in &[0.02, 0.01] {
        let steps = (horizon * n as f64 / eta).round() as usize;
        let mut m = Mat::zeros(n, n);
        for _ in 0..steps {
            let delta = expected_forward_row(&m, &mrp, &rho) * 0.5 + expected_backward_column(&m, &mrp, &rho) * 0.5;
            m += delta * eta;
        }
        let half = (&lap * (-horizon / 2.0)).exp();
        let closed = &lap_inv + &half * (-&lap_inv) * &half;
        errors.push((m - closed).amax());
    }
    // first-order agreement: halving η roughly halves the gap
    assert!(errors[0] < 0.05, "{errors:?}");
    assert!(errors[1] < errors[0] * 0.6, "{errors:?}");
}

#[test]
fn sampled_mixed_agrees_with_expected_average() {
    let (mrp, rho) = random_process(4, 0.6, 7);
    let g = mrp.discount();
    let m = random_matrix(4, 7);
    let got = expect(&m, &mrp, &rho, |mm, t| mixed_td_step(mm, t, &rho, g, 1.0, 0.3));
    let want = expected_forward_row(&m, &mrp, &rho) * 0.3 + expected_backward_column(&m, &mrp, &rho) * 0.7;
    assert!((got - want).amax() < 1e-12);
}

#[test]
fn trace_expectation_matches_reversed_successor_columns() {
    let (mrp, rho) = random_process(4, 0.5, 8);
    let sampler = TransitionSampler::new(&mrp, &rho);
    let decay = 0.5;
    let m = successor_exact(&mrp.clone().with_discount(decay).unwrap()).unwrap();
    let mut rng = stream_rng(8, 1);
    let est = trace_expectation_monte_carlo(&sampler, decay, 100_000, trajectory_burn_in(decay), 20, &mut rng);
    for s in 0..4 {
        for st in 0..4 {
            let want = m[(st, s)] * rho.get(st) / rho.get(s);
            let z = (est.mean[(s, st)] - want).abs() / est.std_error[(s, st)].max(1e-12);
            assert!(z < 4.5, "s={s} s~={st}: {} vs {want} (z={z})", est.mean[(s, st)]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_operators_contract_by_gamma(seed in any::<u64>(), gamma in 0.1f64..0.99) {
        let mrp = random_mrp(8, 0.5, gamma, &mut stream_rng(seed, 0)).unwrap();
        let star = successor_exact(&mrp).unwrap();
        let m = random_matrix(8, seed);
        let before = sup_operator_norm(&(&m - &star));
        let after_f = sup_operator_norm(&(forward_operator(&m, &mrp) - &star));
        let after_b = sup_operator_norm(&(backward_operator(&m, &mrp) - &star));
        prop_assert!(after_f <= gamma * before * (1.0 + 1e-12));
        prop_assert!(after_b <= gamma * before * (1.0 + 1e-12));
    }

    #[test]
    fn forward_row_expectation_vanishes_only_at_fixed_point(seed in any::<u64>()) {
        let (mrp, rho) = random_process(5, 0.85, seed);
        let star = successor_exact(&mrp).unwrap();
        prop_assert!(expected_forward_row(&star, &mrp, &rho).amax() < 1e-12);
        let off = &star + random_matrix(5, seed) * 1e-3;
        prop_assert!(expected_forward_row(&off, &mrp, &rho).amax() > 1e-8);
        prop_assert!(expected_backward_column(&off, &mrp, &rho).amax() > 1e-8);
    }

    #[test]
    fn trace_mass_after_t_steps(decay in 0.0f64..1.0, steps in 1usize..60, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = stream_rng(seed, 0);
        let mut e = EligibilityTrace::new(4);
        for _ in 0..steps {
            e.visit(rng.random_range(0..4), decay);
        }
        let want: f64 = (0..steps).map(|k| decay.powi(k as i32)).sum();
        prop_assert!((e.trace.sum() - want).abs() < 1e-12 * want.max(1.0));
    }
}
