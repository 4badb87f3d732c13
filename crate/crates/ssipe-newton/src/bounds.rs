/// High-probability error bounds after `t` i.i.d. observations:
/// (2γ/(1−γ)²·√(2E/t·log(2/δ)), 3R_max/(1−γ)²·√(2E/t·log(4S/δ))).
pub fn thm16_bound(states: usize, edges: usize, gamma: f64, r_max: f64, t: u64, delta: f64) -> (f64, f64) {
    assert!(t >= 1 && delta > 0.0 && delta < 1.0, "need t >= 1 and delta in (0, 1)");
    let scale = 2.0 * edges as f64 / t as f64;
    let horizon2 = (1.0 - gamma).powi(2);
    let m_bound = 2.0 * gamma / horizon2 * (scale * (2.0 / delta).ln()).sqrt();
    let v_bound = 3.0 * r_max / horizon2 * (scale * (4.0 * states as f64 / delta).ln()).sqrt();
    (m_bound, v_bound)
}
