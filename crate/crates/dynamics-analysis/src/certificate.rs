use mrp_core::{sup_operator_norm, FiniteMrp, Mat};

pub const CERTIFICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathCertificate {
    /// Whether M equals some partial sum Σ_{k≤n} γ^kP^k with n ≤ max_n.
    pub exact: bool,
    /// Largest matching n; 0 when `exact` is false.
    pub n: usize,
}

/// Largest n ≤ max_n with ‖M − Σ_{k≤n} γ^kP^k‖∞ < 1e−9.
pub fn path_certificate(m: &Mat, mrp: &FiniteMrp, max_n: usize) -> PathCertificate {
    path_certificate_tol(m, mrp, max_n, CERTIFICATE_TOL)
}

pub fn path_certificate_tol(m: &Mat, mrp: &FiniteMrp, max_n: usize, tol: f64) -> PathCertificate {
    let s = mrp.num_states();
    let gp = mrp.transition() * mrp.discount();
    let mut term = Mat::identity(s, s);
    let mut partial = term.clone();
    let mut best = None;
    for n in 0..=max_n {
        if n > 0 {
            term = &term * &gp;
            partial += &term;
        }
        if sup_operator_norm(&(m - &partial)) < tol {
            best = Some(n);
        }
    }
    PathCertificate { exact: best.is_some(), n: best.unwrap_or(0) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::torus;

    #[test]
    fn identity_is_length_zero() {
        let mrp = torus(4, 0.8).unwrap();
        assert_eq!(path_certificate(&Mat::identity(4, 4), &mrp, 10), PathCertificate { exact: true, n: 0 });
    }

    #[test]
    fn non_partial_sum_fails() {
        let mrp = torus(4, 0.8).unwrap();
        assert!(!path_certificate(&(Mat::identity(4, 4) * 1.5), &mrp, 10).exact);
    }
}
