use std::str::FromStr;

use mrp_core::{mdp_to_mrp, random_mrp, stream_rng, FiniteMdp, FiniteMrp, Mat, Vector};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{LabError, Result};

fn default_gamma() -> f64 {
    0.9
}

fn default_density() -> f64 {
    0.5
}

/// Declarative description of an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    /// Random walk on {0, …, n−1} with ±1 steps, probability ½ each.
    Torus {
        n: usize,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rewards: Option<Vec<f64>>,
    },
    /// Deterministic cycle s → s+1 mod n; rewards default to r(s) = s.
    Cycle {
        n: usize,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rewards: Option<Vec<f64>>,
    },
    RandomMrp {
        states: usize,
        #[serde(default = "default_density")]
        density: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        seed: u64,
    },
    Gridworld {
        width: usize,
        height: usize,
        #[serde(default)]
        obstacles: Vec<usize>,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    DyadicTree {
        depth: usize,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
}

#[derive(Debug, Clone)]
pub enum Env {
    Mrp(FiniteMrp),
    Mdp(FiniteMdp),
}

impl Env {
    pub fn num_states(&self) -> usize {
        match self {
            Env::Mrp(m) => m.num_states(),
            Env::Mdp(m) => m.num_states(),
        }
    }

    /// The process itself, or the uniformly random policy's process for an MDP.
    pub fn to_mrp(&self) -> Result<FiniteMrp> {
        match self {
            Env::Mrp(m) => Ok(m.clone()),
            Env::Mdp(m) => {
                let a = m.num_actions();
                let policy = Mat::from_element(m.num_states(), a, 1.0 / a as f64);
                if m.discount() < 1.0 {
                    Ok(mdp_to_mrp(m, &policy)?)
                } else {
                    Ok(mdp_to_mrp(&with_mdp_discount(m, 0.5)?, &policy)?.with_discount(1.0)?)
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            Env::Mrp(m) => mrp_core::io::mrp_to_json(m),
            Env::Mdp(m) => mrp_core::io::mdp_to_json(m),
        }
    }
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidSpec(msg.into())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(invalid(format!("gamma {gamma} not in [0, 1]")))
    }
}

fn with_rewards(mrp: FiniteMrp, rewards: Option<&Vec<f64>>) -> Result<FiniteMrp> {
    match rewards {
        None => Ok(mrp),
        Some(r) if r.len() == mrp.num_states() => Ok(mrp.with_rewards(Vector::from_vec(r.clone()))?),
        Some(r) => Err(invalid(format!("{} rewards for {} states", r.len(), mrp.num_states()))),
    }
}

pub fn build_env(spec: &EnvSpec) -> Result<Env> {
    match spec {
        EnvSpec::Torus { n, gamma, rewards } => {
            check_gamma(*gamma)?;
            if *n == 0 {
                return Err(invalid("torus needs n >= 1"));
            }
            let mrp = dynamics_analysis::torus(*n, 0.5)?.with_discount(*gamma)?;
            Ok(Env::Mrp(with_rewards(mrp, rewards.as_ref())?))
        }
        EnvSpec::Cycle { n, gamma, rewards } => {
            check_gamma(*gamma)?;
            if *n == 0 {
                return Err(invalid("cycle needs n >= 1"));
            }
            let p = Mat::from_fn(*n, *n, |i, j| f64::from(u8::from(j == (i + 1) % n)));
            let default: Vec<f64> = (0..*n).map(|s| s as f64).collect();
            let r = rewards.clone().unwrap_or(default);
            if r.len() != *n {
                return Err(invalid(format!("{} rewards for {n} states", r.len())));
            }
            Ok(Env::Mrp(FiniteMrp::undiscounted_ok(p, Vector::from_vec(r), *gamma)?))
        }
        EnvSpec::RandomMrp { states, density, gamma, seed } => {
            check_gamma(*gamma)?;
            let mrp = random_mrp(*states, *density, 0.5, &mut stream_rng(*seed, 0)).map_err(|e| invalid(e.to_string()))?;
            Ok(Env::Mrp(mrp.with_discount(*gamma)?))
        }
        EnvSpec::Gridworld { width, height, obstacles, gamma } => {
            check_gamma(*gamma)?;
            if *width == 0 || *height == 0 {
                return Err(invalid("gridworld needs positive width and height"));
            }
            discounted(goal_values::gridworld(*width, *height, obstacles, gamma.min(0.5))?, *gamma)
        }
        EnvSpec::DyadicTree { depth, gamma } => {
            check_gamma(*gamma)?;
            if *depth > 20 {
                return Err(invalid(format!("dyadic tree depth {depth} > 20")));
            }
            discounted(goal_values::dyadic_tree(*depth, gamma.min(0.5))?, *gamma)
        }
    }
}

fn discounted(mdp: FiniteMdp, gamma: f64) -> Result<Env> {
    Ok(Env::Mdp(if gamma < 1.0 { with_mdp_discount(&mdp, gamma)? } else { mdp.undiscounted() }))
}

fn with_mdp_discount(mdp: &FiniteMdp, gamma: f64) -> Result<FiniteMdp> {
    let (s, a) = (mdp.num_states(), mdp.num_actions());
    let outcomes = (0..s).flat_map(|i| (0..a).map(move |b| (i, b))).map(|(i, b)| mdp.outcomes(i, b).to_vec()).collect();
    Ok(FiniteMdp::from_outcomes(s, a, outcomes, mdp.reward_mean().clone(), gamma)?)
}

/// Parses `kind:key=value,key=value` (lists as `a;b;c`) or a JSON object.
impl FromStr for EnvSpec {
    type Err = LabError;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return serde_json::from_str(text).map_err(|e| invalid(e.to_string()));
        }
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::String(kind.trim().replace('-', "_")));
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| invalid(format!("expected key=value, got {pair:?}")))?;
            let value = if v.contains(';') || k == "obstacles" || k == "rewards" {
                Value::Array(v.split(';').filter(|x| !x.is_empty()).map(scalar).collect())
            } else {
                scalar(v)
            };
            obj.insert(k.trim().into(), value);
        }
        serde_json::from_value(Value::Object(obj)).map_err(|e| invalid(e.to_string()))
    }
}

fn scalar(v: &str) -> Value {
    let v = v.trim();
    if let Ok(i) = v.parse::<u64>() {
        Value::from(i)
    } else if let Ok(x) = v.parse::<f64>() {
        Value::from(x)
    } else {
        Value::String(v.to_string())
    }
}
