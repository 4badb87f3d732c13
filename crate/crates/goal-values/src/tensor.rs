use mrp_core::{Mat, StateDistribution};

use crate::error::{GoalError, Result};

/// Density q̃(s, a, g) of a goal-conditioned Q measure with respect to ρ_G.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalQTensor {
    states: usize,
    actions: usize,
    values: Vec<f64>,
    rho_goal: StateDistribution,
}

impl GoalQTensor {
    /// Zero tensor; goals are states, so `rho_goal` must have S entries.
    pub fn zeros(states: usize, actions: usize, rho_goal: StateDistribution) -> Result<Self> {
        if rho_goal.len() != states {
            return Err(GoalError::Shape(format!("rho_goal has {} entries, expected {states}", rho_goal.len())));
        }
        rho_goal.require_positive()?;
        Ok(Self { states, actions, values: vec![0.0; states * actions * states], rho_goal })
    }

    /// Tensor whose masses Q(s, a, {g}) are given by `mass(s, a, g)`.
    pub fn from_masses(
        states: usize,
        actions: usize,
        rho_goal: StateDistribution,
        mut mass: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut q = Self::zeros(states, actions, rho_goal)?;
        for s in 0..states {
            for a in 0..actions {
                for g in 0..states {
                    let i = q.index(s, a, g);
                    q.values[i] = mass(s, a, g) / q.rho_goal.get(g);
                }
            }
        }
        Ok(q)
    }

    #[inline]
    fn index(&self, s: usize, a: usize, g: usize) -> usize {
        (s * self.actions + a) * self.states + g
    }

    pub fn num_states(&self) -> usize {
        self.states
    }
    pub fn num_actions(&self) -> usize {
        self.actions
    }
    pub fn rho_goal(&self) -> &StateDistribution {
        &self.rho_goal
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// q̃(s, a, g).
    #[inline]
    pub fn get(&self, s: usize, a: usize, g: usize) -> f64 {
        self.values[self.index(s, a, g)]
    }

    #[inline]
    pub fn add(&mut self, s: usize, a: usize, g: usize, delta: f64) {
        let i = self.index(s, a, g);
        self.values[i] += delta;
    }

    /// Q(s, a, {g}) = q̃(s, a, g)·ρ_G(g).
    pub fn mass(&self, s: usize, a: usize, g: usize) -> f64 {
        self.get(s, a, g) * self.rho_goal.get(g)
    }

    /// Total mass of Q(s, a, ·).
    pub fn total_mass(&self, s: usize, a: usize) -> f64 {
        (0..self.states).map(|g| self.mass(s, a, g)).sum()
    }

    /// max over actions of q̃(s, ·, g), ties to the lowest index.
    pub fn max_action(&self, s: usize, g: usize) -> (usize, f64) {
        let mut best = (0, self.get(s, 0, g));
        for a in 1..self.actions {
            let v = self.get(s, a, g);
            if v > best.1 {
                best = (a, v);
            }
        }
        best
    }

    /// Masses for one goal as an S×A matrix.
    pub fn goal_masses(&self, g: usize) -> Mat {
        Mat::from_fn(self.states, self.actions, |s, a| self.mass(s, a, g))
    }

    /// Entrywise q̃ ≤ other + tol, comparing masses.
    pub fn mass_le(&self, other: &Self, tol: f64) -> bool {
        (0..self.states).all(|s| {
            (0..self.actions).all(|a| (0..self.states).all(|g| self.mass(s, a, g) <= other.mass(s, a, g) + tol))
        })
    }

    /// Largest |mass difference| over all entries.
    pub fn max_mass_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for s in 0..self.states {
            for a in 0..self.actions {
                for g in 0..self.states {
                    d = d.max((self.mass(s, a, g) - other.mass(s, a, g)).abs());
                }
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// v(s, g) over a finite goal set G, with φ: S → G.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalVTable {
    pub values: Mat,
    phi: Vec<usize>,
    rho_goal: StateDistribution,
}

impl GoalVTable {
    /// Goals are the states themselves (φ = Id).
    pub fn over_states(rho_goal: StateDistribution) -> Self {
        let n = rho_goal.len();
        Self { values: Mat::zeros(n, n), phi: (0..n).collect(), rho_goal }
    }

    /// Goals are feature values; `phi[s]` indexes into `tau`.
    pub fn over_features(phi: Vec<usize>, tau: StateDistribution) -> Result<Self> {
        if let Some(&bad) = phi.iter().find(|&&g| g >= tau.len()) {
            return Err(GoalError::OutOfRange { index: bad, bound: tau.len() });
        }
        Ok(Self { values: Mat::zeros(phi.len(), tau.len()), phi, rho_goal: tau })
    }

    pub fn num_states(&self) -> usize {
        self.values.nrows()
    }
    pub fn num_goals(&self) -> usize {
        self.values.ncols()
    }
    pub fn phi(&self, s: usize) -> usize {
        self.phi[s]
    }
    pub fn rho_goal(&self) -> &StateDistribution {
        &self.rho_goal
    }
    pub fn is_state_goals(&self) -> bool {
        self.num_goals() == self.num_states() && self.phi.iter().enumerate().all(|(s, &g)| s == g)
    }

    /// Measure form V(s, {g}) = v(s, g)·ρ_G(g).
    pub fn masses(&self) -> Mat {
        let mut m = self.values.clone();
        for g in 0..m.ncols() {
            m.column_mut(g).scale_mut(self.rho_goal.get(g));
        }
        m
    }

    /// α(s, g) = ρ_S(s)ρ_G(g)/ρ_SG(s, g), entries with ρ_SG = 0 reported as NaN.
    pub fn alpha(rho_s: &StateDistribution, rho_goal: &StateDistribution, rho_sg: &Mat) -> Mat {
        Mat::from_fn(rho_sg.nrows(), rho_sg.ncols(), |s, g| {
            let j = rho_sg[(s, g)];
            if j > 0.0 {
                rho_s.get(s) * rho_goal.get(g) / j
            } else {
                f64::NAN
            }
        })
    }
}

/// One transition s → s' taken while pursuing goal g.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoalTransition {
    pub from_state: usize,
    pub to_state: usize,
    pub goal: usize,
}

impl GoalTransition {
    pub fn new(from_state: usize, to_state: usize, goal: usize) -> Self {
        Self { from_state, to_state, goal }
    }

    pub fn check(&self, states: usize, goals: usize) -> Result<()> {
        for (i, b) in [(self.from_state, states), (self.to_state, states), (self.goal, goals)] {
            if i >= b {
                return Err(GoalError::OutOfRange { index: i, bound: b });
            }
        }
        Ok(())
    }
}
