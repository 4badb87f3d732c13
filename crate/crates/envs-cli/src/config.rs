use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tabular_learners::Schedule;

use crate::env::EnvSpec;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TdConvergence,
    SsipeBound,
    BnPathlen,
    FbFixedpoint,
    FlowRates,
    GoalGrid,
    TraceEquivalence,
    Thm25,
    RelativeTd,
    DyadicMass,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::TdConvergence,
        ExperimentKind::SsipeBound,
        ExperimentKind::BnPathlen,
        ExperimentKind::FbFixedpoint,
        ExperimentKind::FlowRates,
        ExperimentKind::GoalGrid,
        ExperimentKind::TraceEquivalence,
        ExperimentKind::Thm25,
        ExperimentKind::RelativeTd,
        ExperimentKind::DyadicMass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TdConvergence => "td-convergence",
            ExperimentKind::SsipeBound => "ssipe-bound",
            ExperimentKind::BnPathlen => "bn-pathlen",
            ExperimentKind::FbFixedpoint => "fb-fixedpoint",
            ExperimentKind::FlowRates => "flow-rates",
            ExperimentKind::GoalGrid => "goal-grid",
            ExperimentKind::TraceEquivalence => "trace-equivalence",
            ExperimentKind::Thm25 => "thm25",
            ExperimentKind::RelativeTd => "relative-td",
            ExperimentKind::DyadicMass => "dyadic-mass",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LabError::InvalidConfig(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub schedule: Schedule,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "one")]
    pub horizon: usize,
}

fn one() -> usize {
    1
}

/// Experiment-specific knobs; unset fields take per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Confidence parameter δ of the concentration bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Uniform reward noise half-width added to every state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// "stationary" (default) or "uniform".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<String>,
    /// "identity", "zero" or "random".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goals_per_sample: Option<usize>,
    /// "iid", "stratified" or "systematic".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_sampling: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    /// Rows emitted for step-indexed experiments (default 100).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "yes")]
    pub svg: bool,
    #[serde(default = "yes")]
    pub log_y: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, svg: true, log_y: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub env: EnvSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learner: Option<LearnerSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub steps: u64,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::InvalidConfig(m));
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return bad("duplicate seeds".into());
        }
        if self.steps == 0 && !matches!(self.experiment, ExperimentKind::BnPathlen | ExperimentKind::FlowRates) {
            return bad(format!("{} needs steps > 0", self.experiment));
        }
        if let Some(l) = &self.learner {
            if !l.schedule.is_valid() || !(0.0..=1.0).contains(&l.lambda) || l.horizon == 0 {
                return bad(format!("invalid learner {l:?}"));
            }
        }
        let p = &self.params;
        for (name, v) in [("eta", p.eta), ("dt", p.dt), ("tolerance", p.tolerance)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return bad(format!("{name} must be positive, got {x}"));
                }
            }
        }
        if let Some(d) = p.delta {
            if !(d > 0.0 && d < 1.0) {
                return bad(format!("delta must be in (0, 1), got {d}"));
            }
        }
        match (self.experiment, &self.env) {
            (ExperimentKind::GoalGrid, EnvSpec::Gridworld { .. }) | (ExperimentKind::DyadicMass, EnvSpec::DyadicTree { .. }) => {}
            (ExperimentKind::GoalGrid, _) => return bad("goal-grid needs a gridworld env".into()),
            (ExperimentKind::DyadicMass, _) => return bad("dyadic-mass needs a dyadic_tree env".into()),
            _ => {}
        }
        if self.experiment == ExperimentKind::BnPathlen && self.steps > 16 {
            return bad("bn-pathlen supports at most 16 steps".into());
        }
        Ok(())
    }
}

/// Parses `a..b` (inclusive), `a..=b`, `a,b,c` or a single seed.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let err = || LabError::InvalidConfig(format!("bad seed list {text:?}"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| err());
    let text = text.trim();
    let seeds = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?);
        if a > b {
            return Err(err());
        }
        (a..=b).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    Ok(seeds)
}
