use std::fmt::Write;
use std::str::FromStr;

use mrp_core::{successor_exact, value_exact};

use crate::env::Env;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleQuantity {
    /// Successor matrix (Id − γP)⁻¹.
    M,
    /// Value function MR.
    V,
    /// Eigenvalues of P, by decreasing modulus.
    Spectrum,
}

impl FromStr for OracleQuantity {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" | "m" => Ok(Self::M),
            "V" | "v" => Ok(Self::V),
            "spectrum" => Ok(Self::Spectrum),
            other => Err(LabError::InvalidConfig(format!("unknown oracle quantity {other:?} (expected M, V or spectrum)"))),
        }
    }
}

/// Exact quantity as CSV. MDPs are evaluated under the uniform policy.
pub fn oracle_csv(env: &Env, what: OracleQuantity) -> Result<String> {
    let mrp = env.to_mrp()?;
    let n = mrp.num_states();
    let mut out = String::new();
    match what {
        OracleQuantity::M => {
            let m = successor_exact(&mrp)?;
            let header: Vec<String> = (0..n).map(|j| j.to_string()).collect();
            let _ = writeln!(out, "s,{}", header.join(","));
            for i in 0..n {
                let row: Vec<String> = m.row(i).iter().map(|x| format!("{x:?}")).collect();
                let _ = writeln!(out, "{i},{}", row.join(","));
            }
        }
        OracleQuantity::V => {
            let v = value_exact(&mrp)?;
            out.push_str("s,v\n");
            for (i, x) in v.iter().enumerate() {
                let _ = writeln!(out, "{i},{x:?}");
            }
        }
        OracleQuantity::Spectrum => {
            let mut eig: Vec<(f64, f64)> = mrp.transition().complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
            eig.sort_by(|a, b| {
                let (ma, mb) = (a.0.hypot(a.1), b.0.hypot(b.1));
                mb.total_cmp(&ma).then(b.0.total_cmp(&a.0)).then(b.1.total_cmp(&a.1))
            });
            out.push_str("k,re,im\n");
            for (k, (re, im)) in eig.iter().enumerate() {
                let _ = writeln!(out, "{k},{re:?},{im:?}");
            }
        }
    }
    Ok(out)
}
