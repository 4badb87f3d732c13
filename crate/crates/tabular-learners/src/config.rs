use mrp_core::StateDistribution;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Constant { eta: f64 },
    /// η_t = 1/(t+1)
    InverseTime,
    /// η_t = c/(c+t)
    Harmonic { c: f64 },
}

impl Schedule {
    /// Learning rate at zero-based step `t`.
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            Schedule::Constant { eta } => eta,
            Schedule::InverseTime => 1.0 / (t as f64 + 1.0),
            Schedule::Harmonic { c } => c / (c + t as f64),
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            Schedule::Constant { eta } => eta > 0.0 && eta.is_finite(),
            Schedule::InverseTime => true,
            Schedule::Harmonic { c } => c > 0.0 && c.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub learning_rate: Schedule,
    pub discount: f64,
    pub horizon: usize,
    pub lambda: f64,
    pub reference_distribution: Option<StateDistribution>,
}

impl LearnerConfig {
    pub fn new(learning_rate: Schedule, discount: f64) -> Self {
        Self { learning_rate, discount, horizon: 1, lambda: 0.0, reference_distribution: None }
    }

    pub fn with_horizon(mut self, h: usize) -> Self {
        self.horizon = h;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_reference(mut self, rho_rel: StateDistribution) -> Self {
        self.reference_distribution = Some(rho_rel);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.learning_rate.is_valid() {
            return Err(format!("invalid learning rate {:?}", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if self.horizon == 0 {
            return Err("horizon must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(format!("discount {} outside [0, 1]", self.discount));
        }
        Ok(())
    }

    pub fn eta(&self, t: u64) -> f64 {
        self.learning_rate.at(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        assert_eq!(Schedule::Constant { eta: 0.3 }.at(1000), 0.3);
        assert_eq!(Schedule::InverseTime.at(0), 1.0);
        assert_eq!(Schedule::InverseTime.at(3), 0.25);
        assert_eq!(Schedule::Harmonic { c: 100.0 }.at(100), 0.5);
    }

    #[test]
    fn validation() {
        let ok = LearnerConfig::new(Schedule::InverseTime, 0.9);
        assert!(ok.validate().is_ok());
        assert!(ok.clone().with_lambda(1.5).validate().is_err());
        assert!(ok.clone().with_horizon(0).validate().is_err());
        assert!(LearnerConfig::new(Schedule::Constant { eta: 0.0 }, 0.9).validate().is_err());
    }

    #[test]
    fn schedule_serializes_with_tag() {
        let s = serde_json::to_string(&Schedule::Harmonic { c: 100.0 }).unwrap();
        assert_eq!(s, r#"{"kind":"harmonic","c":100.0}"#);
    }
}
