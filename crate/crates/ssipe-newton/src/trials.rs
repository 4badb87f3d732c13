use std::io::Write;

use mrp_core::{stream_rng, FiniteMrp, StateDistribution};

use crate::estimate::{ssipe_trial, EstimateError, TrialResult};

/// Trials `0..trials`, trial k drawing from RNG stream k of `seed`.
pub fn run_trials(
    mrp: &FiniteMrp,
    rho: &StateDistribution,
    steps: u64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialResult>, EstimateError> {
    (0..trials).map(|k| ssipe_trial(mrp, rho, steps, delta, k, &mut stream_rng(seed, k))).collect()
}

/// Fractions of trials inside the M bound and the V bound.
pub fn coverage(results: &[TrialResult]) -> (f64, f64) {
    let n = results.len().max(1) as f64;
    let m = results.iter().filter(|r| r.within_m()).count() as f64 / n;
    let v = results.iter().filter(|r| r.within_v()).count() as f64 / n;
    (m, v)
}

pub fn write_trials_csv<W: Write>(out: W, results: &[TrialResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial_id", "t", "tv_error_m", "rho_error_v", "m_bound", "v_bound", "within_bound"])?;
    for r in results {
        w.write_record([
            r.trial_id.to_string(),
            r.t.to_string(),
            r.tv_error_m.to_string(),
            r.rho_error_v.to_string(),
            r.m_bound.to_string(),
            r.v_bound.to_string(),
            u8::from(r.within_bound()).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let r = TrialResult { trial_id: 3, t: 100, tv_error_m: 0.5, rho_error_v: 0.25, m_bound: 1.0, v_bound: 0.1 };
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "trial_id,t,tv_error_m,rho_error_v,m_bound,v_bound,within_bound\n3,100,0.5,0.25,1,0.1,0\n");
        assert_eq!(coverage(&[r]), (1.0, 0.0));
    }
}
