use mrp_core::{FiniteMdp, Mat};

use crate::error::{GoalError, Result};

/// Action offsets (dx, dy): up, right, down, left.
pub const GRID_MOVES: [(i64, i64); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

/// Deterministic w×h grid, state = y·w + x. Moves off the grid or into an
/// obstacle leave the state unchanged; obstacle cells only loop to themselves.
pub fn gridworld(width: usize, height: usize, obstacles: &[usize], gamma: f64) -> Result<FiniteMdp> {
    let n = width * height;
    if let Some(&bad) = obstacles.iter().find(|&&o| o >= n) {
        return Err(GoalError::OutOfRange { index: bad, bound: n });
    }
    let blocked = |s: usize| obstacles.contains(&s);
    let mut outcomes = Vec::with_capacity(n * 4);
    for s in 0..n {
        let (x, y) = ((s % width) as i64, (s / width) as i64);
        for (dx, dy) in GRID_MOVES {
            let (nx, ny) = (x + dx, y + dy);
            let inside = nx >= 0 && ny >= 0 && nx < width as i64 && ny < height as i64;
            let mut t = if inside { ny as usize * width + nx as usize } else { s };
            if blocked(s) || blocked(t) {
                t = s;
            }
            outcomes.push(vec![(t, 1.0)]);
        }
    }
    Ok(FiniteMdp::from_outcomes(n, 4, outcomes, Mat::zeros(n, 4), gamma)?)
}

/// Truncated rooted dyadic tree in heap order: action b from node i goes to
/// child 2i + 1 + b. Leaves at `depth` have empty rows, so episodes end there.
pub fn dyadic_tree(depth: usize, gamma: f64) -> Result<FiniteMdp> {
    let n = (1usize << (depth + 1)) - 1;
    let internal = (1usize << depth) - 1;
    let mut outcomes = Vec::with_capacity(2 * n);
    for s in 0..n {
        for b in 0..2 {
            outcomes.push(if s < internal { vec![(2 * s + 1 + b, 1.0)] } else { Vec::new() });
        }
    }
    Ok(FiniteMdp::from_outcomes(n, 2, outcomes, Mat::zeros(n, 2), gamma)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_corner_bounces() {
        let g = gridworld(3, 3, &[], 0.9).unwrap();
        assert_eq!(g.num_states(), 9);
        assert_eq!(g.outcomes(0, 0), &[(0, 1.0)]);
        assert_eq!(g.outcomes(0, 3), &[(0, 1.0)]);
        assert_eq!(g.outcomes(0, 1), &[(1, 1.0)]);
        assert_eq!(g.outcomes(4, 2), &[(7, 1.0)]);
        assert!(g.is_stochastic(1e-15));
    }

    #[test]
    fn grid_obstacles_block() {
        let g = gridworld(3, 1, &[1], 0.9).unwrap();
        assert_eq!(g.outcomes(0, 1), &[(0, 1.0)]);
        assert_eq!(g.outcomes(1, 3), &[(1, 1.0)]);
    }

    #[test]
    fn tree_sizes() {
        assert_eq!(dyadic_tree(4, 0.5).unwrap().num_states(), 31);
        let t = dyadic_tree(2, 0.5).unwrap();
        assert_eq!(t.outcomes(0, 1), &[(2, 1.0)]);
        assert_eq!(t.outcomes(2, 0), &[(5, 1.0)]);
        assert!(t.outcomes(3, 0).is_empty());
    }
}
