use mrp_core::{Mat, TransitionSample, Vector};

/// m̃_θ = Σ_i θ_i φ_i over state pairs; the model of M is m̃_θ·ρ̂.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMModel {
    pub features: Vec<Mat>,
    pub theta: Vector,
}

impl LinearMModel {
    pub fn new(features: Vec<Mat>) -> Self {
        let k = features.len();
        Self { features, theta: Vector::zeros(k) }
    }

    /// One indicator feature per pair, ordered row-major.
    pub fn tabular(states: usize) -> Self {
        let features = (0..states * states)
            .map(|k| {
                let mut f = Mat::zeros(states, states);
                f[(k / states, k % states)] = 1.0;
                f
            })
            .collect();
        Self::new(features)
    }

    pub fn model(&self) -> Mat {
        let (r, c) = self.features.first().map_or((0, 0), Mat::shape);
        let mut m = Mat::zeros(r, c);
        for (phi, &th) in self.features.iter().zip(self.theta.iter()) {
            m += phi * th;
        }
        m
    }

    pub fn value(&self, s: usize, s2: usize) -> f64 {
        self.features.iter().zip(self.theta.iter()).map(|(phi, &th)| th * phi[(s, s2)]).sum()
    }
}

/// θ_i += η(φ_i(s,s) + φ_i(s,s₂)(γm̃(s',s₂) − m̃(s,s₂))).
pub fn linear_td_step(model: &mut LinearMModel, t: &TransitionSample, s2: usize, gamma: f64, eta: f64) {
    let s = t.from_state;
    let g = t.continuation(gamma);
    let boot = if g == 0.0 { 0.0 } else { g * model.value(t.to_state, s2) };
    let gap = boot - model.value(s, s2);
    for (phi, th) in model.features.iter().zip(model.theta.iter_mut()) {
        *th += eta * (phi[(s, s)] + phi[(s, s2)] * gap);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_feature_on_self_loop() {
        let mut model = LinearMModel::new(vec![Mat::from_element(1, 1, 1.0)]);
        let t = TransitionSample::new(0, 0, 0.0);
        for _ in 0..2000 {
            linear_td_step(&mut model, &t, 0, 0.8, 0.1);
        }
        assert!((model.theta[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn tabular_model_reproduces_parameters() {
        let mut model = LinearMModel::tabular(2);
        model.theta = Vector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(model.model(), Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(model.value(1, 0), 3.0);
    }
}
