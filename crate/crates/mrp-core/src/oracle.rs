use crate::error::{MrpError, Result};
use crate::model::{FiniteMdp, FiniteMrp, Mat, StateDistribution, SuccessorMatrix, Vector};

pub const PATH_ENUMERATION_BUDGET: f64 = 1e7;
const STATIONARY_TOL: f64 = 1e-10;
const STATIONARY_MAX_ITERS: usize = 1_000_000;
const UNDAMPED_ITERS: usize = 10_000;
const BACKWARD_STATIONARY_TOL: f64 = 1e-8;

pub fn invert(a: &Mat) -> Result<Mat> {
    a.clone().lu().try_inverse().ok_or(MrpError::Singular)
}

/// M = (Id − γP)⁻¹ by LU inversion.
pub fn successor_exact(mrp: &FiniteMrp) -> Result<SuccessorMatrix> {
    if mrp.discount() >= 1.0 {
        return Err(MrpError::InvalidModel("successor matrix needs gamma < 1".into()));
    }
    invert(&mrp.laplacian())
}

/// Σ_{k=0}^{n} γ^k P^k.
pub fn successor_partial_sum(mrp: &FiniteMrp, horizon: usize) -> SuccessorMatrix {
    let s = mrp.num_states();
    let gp = mrp.transition() * mrp.discount();
    let mut term = Mat::identity(s, s);
    let mut acc = term.clone();
    for _ in 0..horizon {
        term = &term * &gp;
        acc += &term;
    }
    acc
}

/// Sum over explicitly enumerated paths of length ≤ `max_len` from `from` to `to`
/// of γ^{|p|}·P(p).
pub fn path_sum_oracle(mrp: &FiniteMrp, from: usize, to: usize, max_len: usize) -> Result<f64> {
    let s = mrp.num_states();
    for idx in [from, to] {
        if idx >= s {
            return Err(MrpError::StateOutOfRange { index: idx, states: s });
        }
    }
    let succ: Vec<Vec<(usize, f64)>> = (0..s)
        .map(|i| (0..s).filter_map(|j| Some((j, mrp.transition()[(i, j)])).filter(|&(_, p)| p > 0.0)).collect())
        .collect();
    let branching = succ.iter().map(Vec::len).max().unwrap_or(0).max(1) as f64;
    let paths = branching.powi(max_len as i32);
    if paths > PATH_ENUMERATION_BUDGET {
        return Err(MrpError::EnumerationBudget { paths, budget: PATH_ENUMERATION_BUDGET });
    }
    let gamma = mrp.discount();
    let mut total = 0.0;
    // (state, depth, weight) stack
    let mut stack = vec![(from, 0usize, 1.0f64)];
    while let Some((state, depth, weight)) = stack.pop() {
        if state == to {
            total += weight;
        }
        if depth < max_len {
            for &(next, p) in &succ[state] {
                stack.push((next, depth + 1, weight * gamma * p));
            }
        }
    }
    Ok(total)
}

/// V = M R.
pub fn value_exact(mrp: &FiniteMrp) -> Result<Vector> {
    Ok(successor_exact(mrp)? * mrp.reward_mean())
}

fn stationary_residual(p: &Mat, rho: &Vector) -> f64 {
    (p.tr_mul(rho) - rho).abs().sum()
}

/// Power iteration ρ ← Pᵀρ from uniform. Falls back to the lazy chain
/// (½Id + ½P, same stationary law) when the plain iteration stalls, which
/// handles periodic chains.
pub fn stationary_distribution(mrp: &FiniteMrp) -> Result<StateDistribution> {
    let p = mrp.transition();
    let s = mrp.num_states();
    let mut rho = Vector::from_element(s, 1.0 / s as f64);
    let mut damped = false;
    let mut residual = stationary_residual(p, &rho);
    for iter in 0..STATIONARY_MAX_ITERS {
        if residual < STATIONARY_TOL {
            break;
        }
        if !damped && iter == UNDAMPED_ITERS {
            damped = true;
        }
        let next = p.tr_mul(&rho);
        rho = if damped { (&rho + next) * 0.5 } else { next };
        let mass = rho.sum();
        if !(mass > 0.0) {
            return Err(MrpError::NoConvergence { iterations: iter + 1, residual: f64::INFINITY });
        }
        rho /= mass;
        residual = stationary_residual(p, &rho);
    }
    if residual >= STATIONARY_TOL {
        return Err(MrpError::NoConvergence { iterations: STATIONARY_MAX_ITERS, residual });
    }
    // Polish with one direct solve; power iteration stops at 1e-10, which leaves
    // visible error in ratios like ρ_s/ρ_{s'} for rarely visited states.
    if let Some(refined) = solve_stationary(p) {
        if refined.iter().all(|&w| w >= 0.0) && stationary_residual(p, &refined) < residual {
            rho = refined;
        }
    }
    let sum = rho.sum();
    StateDistribution::new(rho / sum)
}

fn solve_stationary(p: &Mat) -> Option<Vector> {
    let s = p.nrows();
    let mut a = p.transpose() - Mat::identity(s, s);
    a.row_mut(s - 1).fill(1.0);
    let mut b = Vector::zeros(s);
    b[s - 1] = 1.0;
    a.lu().solve(&b)
}

/// Time reversal: (P_back)_{s's} = ρ_s P_{ss'} / ρ_{s'}. Rewards are carried over per state.
pub fn backward_process(mrp: &FiniteMrp, rho: &StateDistribution) -> Result<FiniteMrp> {
    rho.require_positive()?;
    let p = mrp.transition();
    let w = rho.weights();
    let residual = stationary_residual(p, w);
    if residual > BACKWARD_STATIONARY_TOL {
        return Err(MrpError::NotStationary(residual));
    }
    let s = mrp.num_states();
    let back = Mat::from_fn(s, s, |i, j| w[j] * p[(j, i)] / w[i]);
    FiniteMrp::undiscounted_ok(back, mrp.reward_mean().clone(), mrp.discount())?
        .with_noise(mrp.reward_noise().clone(), mrp.noise_kind())
}

fn check_policy(mdp: &FiniteMdp, policy: &Mat) -> Result<()> {
    if policy.shape() != (mdp.num_states(), mdp.num_actions()) {
        return Err(MrpError::InvalidPolicy(format!(
            "policy is {}x{}, expected {}x{}",
            policy.nrows(),
            policy.ncols(),
            mdp.num_states(),
            mdp.num_actions()
        )));
    }
    for s in 0..policy.nrows() {
        let row = policy.row(s);
        if row.iter().any(|&p| !(p >= 0.0)) || (row.sum() - 1.0).abs() > 1e-9 {
            return Err(MrpError::InvalidPolicy(format!("row {s} is not a distribution")));
        }
    }
    Ok(())
}

/// P(s, s') = Σ_a π(s,a) P(s,a,s'), R(s) = Σ_a π(s,a) r(s,a).
pub fn mdp_to_mrp(mdp: &FiniteMdp, policy: &Mat) -> Result<FiniteMrp> {
    check_policy(mdp, policy)?;
    let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());
    let mut p = Mat::zeros(s_count, s_count);
    let mut r = Vector::zeros(s_count);
    for s in 0..s_count {
        for a in 0..a_count {
            let w = policy[(s, a)];
            if w == 0.0 {
                continue;
            }
            r[s] += w * mdp.reward_mean()[(s, a)];
            for &(t, prob) in mdp.outcomes(s, a) {
                p[(s, t)] += w * prob;
            }
        }
    }
    FiniteMrp::new(p, r, mdp.discount())
}

/// Process over pairs (s, a), indexed s·A + a: P((s,a),(s',a')) = P(s,a,s') π(s',a').
pub fn mdp_to_state_action_mrp(mdp: &FiniteMdp, policy: &Mat) -> Result<FiniteMrp> {
    check_policy(mdp, policy)?;
    let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());
    let n = s_count * a_count;
    let mut p = Mat::zeros(n, n);
    let mut r = Vector::zeros(n);
    for s in 0..s_count {
        for a in 0..a_count {
            let i = s * a_count + a;
            r[i] = mdp.reward_mean()[(s, a)];
            for &(t, prob) in mdp.outcomes(s, a) {
                for b in 0..a_count {
                    p[(i, t * a_count + b)] += prob * policy[(t, b)];
                }
            }
        }
    }
    FiniteMrp::new(p, r, mdp.discount())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FiniteMdp;

    fn two_cycle(gamma: f64) -> FiniteMrp {
        FiniteMrp::new(Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), Vector::from_vec(vec![1.0, 0.0]), gamma)
            .unwrap()
    }

    fn torus(n: usize, gamma: f64) -> FiniteMrp {
        let mut p = Mat::zeros(n, n);
        for i in 0..n {
            p[(i, (i + 1) % n)] += 0.5;
            p[(i, (i + n - 1) % n)] += 0.5;
        }
        FiniteMrp::new(p, Vector::zeros(n), gamma).unwrap()
    }

    #[test]
    fn self_loop_successor() {
        let m = FiniteMrp::new(Mat::identity(1, 1), Vector::from_element(1, 1.0), 0.5).unwrap();
        assert!((successor_exact(&m).unwrap()[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((value_exact(&m).unwrap()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_cycle_successor_and_value() {
        let m = successor_exact(&two_cycle(0.5)).unwrap();
        let want = Mat::from_row_slice(2, 2, &[4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0]);
        assert!((m - want).amax() < 1e-12);
        let v = value_exact(&two_cycle(0.5)).unwrap();
        assert!((v[0] - 4.0 / 3.0).abs() < 1e-12 && (v[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn torus_laplacian_spectrum() {
        let (n, gamma) = (8, 0.9);
        let lap = torus(n, gamma).laplacian();
        let mut eig: Vec<f64> = lap.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = (0..n)
            .map(|k| (1.0 - gamma) + 2.0 * gamma * (std::f64::consts::PI * k as f64 / n as f64).sin().powi(2))
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn partial_sums() {
        let m = two_cycle(0.5);
        assert_eq!(successor_partial_sum(&m, 0), Mat::identity(2, 2));
        let one = Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert!((successor_partial_sum(&m, 1) - one).amax() < 1e-15);
        assert!((successor_partial_sum(&m, 40) - successor_exact(&m).unwrap()).amax() < 1e-9);
    }

    #[test]
    fn path_sums() {
        let m = two_cycle(0.5);
        assert_eq!(path_sum_oracle(&m, 1, 1, 0).unwrap(), 1.0);
        assert!((path_sum_oracle(&m, 0, 1, 3).unwrap() - 0.625).abs() < 1e-15);
        let dense = FiniteMrp::new(Mat::from_element(20, 20, 0.05), Vector::zeros(20), 0.5).unwrap();
        assert!(matches!(path_sum_oracle(&dense, 0, 1, 6), Err(MrpError::EnumerationBudget { .. })));
    }

    #[test]
    fn stationary_examples() {
        let m = FiniteMrp::new(Mat::from_row_slice(2, 2, &[0.9, 0.1, 0.5, 0.5]), Vector::zeros(2), 0.5).unwrap();
        let rho = stationary_distribution(&m).unwrap();
        assert!((rho.get(0) - 5.0 / 6.0).abs() < 1e-9);
        let rho = stationary_distribution(&torus(8, 0.9)).unwrap();
        assert!((rho.weights() - Vector::from_element(8, 0.125)).amax() < 1e-12);
    }

    #[test]
    fn stationary_of_periodic_chain_from_nonuniform_start_needs_damping() {
        // 0 -> 1 -> 2 -> 0 plus a transient-free asymmetric variant that is still periodic.
        let p = Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let m = FiniteMrp::new(p, Vector::zeros(3), 0.5).unwrap();
        let rho = stationary_distribution(&m).unwrap();
        assert!((rho.weights() - Vector::from_element(3, 1.0 / 3.0)).amax() < 1e-10);
        // period-2 bipartite chain with unequal stationary weights
        let p = Mat::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let m = FiniteMrp::new(p, Vector::zeros(3), 0.5).unwrap();
        let rho = stationary_distribution(&m).unwrap();
        let want = Vector::from_vec(vec![0.5, 0.25, 0.25]);
        assert!((rho.weights() - want).amax() < 1e-9);
    }

    #[test]
    fn backward_examples() {
        let p = Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let m = FiniteMrp::new(p.clone(), Vector::zeros(3), 0.5).unwrap();
        let back = backward_process(&m, &StateDistribution::uniform(3)).unwrap();
        assert!((back.transition() - p.transpose()).amax() < 1e-15);

        let m = FiniteMrp::new(Mat::from_row_slice(2, 2, &[0.9, 0.1, 0.5, 0.5]), Vector::zeros(2), 0.5).unwrap();
        let rho = StateDistribution::new(Vector::from_vec(vec![5.0 / 6.0, 1.0 / 6.0])).unwrap();
        let back = backward_process(&m, &rho).unwrap();
        // ρ_s P_{ss'} / ρ_{s'}
        let want = Mat::from_row_slice(2, 2, &[0.9, (1.0 / 6.0) * 0.5 / (5.0 / 6.0), (5.0 / 6.0) * 0.1 / (1.0 / 6.0), 0.5]);
        assert!((back.transition() - want).amax() < 1e-12);
        assert!(back.is_stochastic(1e-12));

        let bad = StateDistribution::uniform(2);
        assert!(matches!(backward_process(&m, &bad), Err(MrpError::NotStationary(_))));
    }

    #[test]
    fn mdp_reductions() {
        let p = vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.5, 0.5], vec![0.0, 1.0]],
        ];
        let r = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let mdp = FiniteMdp::from_dense(&p, r, 0.9).unwrap();
        let det = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let mrp = mdp_to_mrp(&mdp, &det).unwrap();
        assert_eq!(mrp.transition(), &Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.5]));
        assert_eq!(mrp.reward_mean()[0], 2.0);

        let mixed = Mat::from_row_slice(2, 2, &[0.25, 0.75, 0.5, 0.5]);
        let mrp = mdp_to_mrp(&mdp, &mixed).unwrap();
        let want = Mat::from_row_slice(2, 2, &[0.25, 0.75, 0.25, 0.75]);
        assert!((mrp.transition() - want).amax() < 1e-15);
        assert!((mrp.reward_mean()[1] - 3.5).abs() < 1e-15);

        let sa = mdp_to_state_action_mrp(&mdp, &mixed).unwrap();
        assert_eq!(sa.num_states(), 4);
        assert!(sa.is_stochastic(1e-12));
        // (0,0) -> state 0 surely, then a' ~ π(0,·)
        assert!((sa.transition()[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((sa.transition()[(0, 1)] - 0.75).abs() < 1e-15);

        let bad = Mat::from_row_slice(2, 2, &[0.5, 0.6, 0.5, 0.5]);
        assert!(matches!(mdp_to_mrp(&mdp, &bad), Err(MrpError::InvalidPolicy(_))));
    }

    #[test]
    fn identical_actions_under_uniform_policy() {
        let p = vec![vec![vec![0.3, 0.7], vec![0.3, 0.7]], vec![vec![1.0, 0.0], vec![1.0, 0.0]]];
        let mdp = FiniteMdp::from_dense(&p, Mat::zeros(2, 2), 0.5).unwrap();
        let mrp = mdp_to_mrp(&mdp, &Mat::from_element(2, 2, 0.5)).unwrap();
        let want = Mat::from_row_slice(2, 2, &[0.3, 0.7, 1.0, 0.0]);
        assert!((mrp.transition() - want).amax() < 1e-15);
    }
}
