use std::io::{Read, Write};

use crate::error::Result;
use crate::experiment::GoalSample;
use crate::tensor::GoalTransition;

/// Rows `s,a,s',g`.
pub fn write_goal_dataset<W: Write>(w: W, rows: &[GoalSample]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s", "a", "s_next", "g"])?;
    for r in rows {
        out.write_record([r.state, r.action, r.next_state, r.goal].map(|x| x.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_goal_dataset<R: Read>(r: R) -> Result<Vec<GoalSample>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        let (state, action, next_state, goal): (usize, usize, usize, usize) = rec?;
        rows.push(GoalSample { state, action, next_state, goal });
    }
    Ok(rows)
}

/// Rows `s,s',g` for V-mode data.
pub fn write_goal_v_dataset<W: Write>(w: W, rows: &[GoalTransition]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s", "s_next", "g"])?;
    for r in rows {
        out.write_record([r.from_state, r.to_state, r.goal].map(|x| x.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_goal_v_dataset<R: Read>(r: R) -> Result<Vec<GoalTransition>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        let (s, t, g): (usize, usize, usize) = rec?;
        rows.push(GoalTransition::new(s, t, g));
    }
    Ok(rows)
}

/// Rows `g,s,action` from `policy[g][s]`.
pub fn write_policy_csv<W: Write>(w: W, policy: &[Vec<usize>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["g", "s", "action"])?;
    for (g, row) in policy.iter().enumerate() {
        for (s, &a) in row.iter().enumerate() {
            out.write_record([g, s, a].map(|x| x.to_string()))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datasets_round_trip() {
        let rows = vec![GoalSample { state: 1, action: 3, next_state: 2, goal: 0 }, GoalSample { state: 0, action: 0, next_state: 0, goal: 4 }];
        let mut buf = Vec::new();
        write_goal_dataset(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("s,a,s_next,g\n1,3,2,0\n"));
        assert_eq!(read_goal_dataset(buf.as_slice()).unwrap(), rows);

        let vrows = vec![GoalTransition::new(2, 1, 1)];
        let mut buf = Vec::new();
        write_goal_v_dataset(&mut buf, &vrows).unwrap();
        assert_eq!(read_goal_v_dataset(buf.as_slice()).unwrap(), vrows);
    }

    #[test]
    fn policy_rows() {
        let mut buf = Vec::new();
        write_policy_csv(&mut buf, &[vec![2, 0], vec![1, 1]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "g,s,action\n0,0,2\n0,1,0\n1,0,1\n1,1,1\n");
    }
}
