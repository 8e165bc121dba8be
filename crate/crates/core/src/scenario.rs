//! Scenario files (JSON).
//!
//! ```json
//! {
//!   "n": 5, "d": 1,
//!   "epsilon": 0.1,              // confidence bound, opinion units
//!   "delta": 0.01,               // triviality threshold, opinion units
//!   "horizon": 100000,           // steps
//!   "initial_opinions": { "uniform_box": { "lo": 0.0, "hi": 0.3, "seed": 7 } },
//!   "schedule": {
//!     "kind": "stochastic_support",
//!     "support": [ { "agents": [0, 1], "probability": 0.5 },
//!                  { "agents": [2, 3, 4], "probability": 0.5 } ],
//!     "partition_indices": [0, 1],
//!     "open_alpha": { "interval": { "lo": 0.0, "hi": 0.5 } },
//!     "seed": 42
//!   },
//!   "master_seed": 1,
//!   "m_max": 16,
//!   "outputs": { "trajectory": true, "format": "jsonl" }
//! }
//! ```
//!
//! Agent indices are zero-based. Opinions are unconstrained reals.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::OpinionState;
use crate::error::{Error, Result};
use crate::schedule::{derive_seed, ScheduleSpec};
use crate::stopping::{DEFAULT_M_MAX, M_MIN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialOpinions {
    Explicit(Vec<Vec<f64>>),
    /// Independent uniform coordinates in `[lo, hi]`.
    UniformBox { lo: f64, hi: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFormat {
    #[default]
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub trajectory: bool,
    pub energy: bool,
    pub stopping_report: bool,
    pub ensemble_summary: bool,
    pub format: TrajectoryFormat,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            trajectory: true,
            energy: true,
            stopping_report: true,
            ensemble_summary: true,
            format: TrajectoryFormat::Jsonl,
        }
    }
}

fn default_m_max() -> u32 {
    DEFAULT_M_MAX
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub horizon: u64,
    pub initial_opinions: InitialOpinions,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_m_max")]
    pub m_max: u32,
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Parse(format!("at `{path}`: {}", e.into_inner()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "at least one agent is required"));
        }
        if self.d == 0 {
            return Err(Error::config("d", "dimension must be at least 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::config("epsilon", format!("must be finite and > 0, got {}", self.epsilon)));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::config("delta", format!("must be finite and > 0, got {}", self.delta)));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "horizon must be at least 1"));
        }
        if self.m_max < M_MIN {
            return Err(Error::config("m_max", format!("must be at least {M_MIN}")));
        }
        match &self.initial_opinions {
            InitialOpinions::Explicit(rows) => {
                if rows.len() != self.n {
                    return Err(Error::config(
                        "initial_opinions.explicit",
                        format!("expected {} opinions, found {}", self.n, rows.len()),
                    ));
                }
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != self.d {
                        return Err(Error::config(
                            format!("initial_opinions.explicit[{i}]"),
                            format!("expected {} coordinates, found {}", self.d, row.len()),
                        ));
                    }
                    if let Some(k) = row.iter().position(|c| !c.is_finite()) {
                        return Err(Error::config(
                            format!("initial_opinions.explicit[{i}][{k}]"),
                            "coordinate is not finite",
                        ));
                    }
                }
            }
            InitialOpinions::UniformBox { lo, hi, .. } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::config(
                        "initial_opinions.uniform_box",
                        format!("need finite lo <= hi, got [{lo}, {hi}]"),
                    ));
                }
            }
        }
        self.schedule.validate(self.n).map_err(|e| match e {
            Error::Config { path, reason } if !path.starts_with("schedule") => {
                Error::config(format!("schedule.{path}"), reason)
            }
            other => other,
        })
    }

    /// Initial state for a single run (`run = None`) or ensemble member `run`.
    /// Explicit opinions are shared by every run; generated ones are redrawn
    /// per run from the generator seed.
    pub fn initial_state(&self, run: Option<u64>) -> Result<OpinionState> {
        let rows = match &self.initial_opinions {
            InitialOpinions::Explicit(rows) => rows.clone(),
            InitialOpinions::UniformBox { lo, hi, seed } => {
                let seed = run.map_or(*seed, |r| derive_seed(*seed, r));
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..self.n)
                    .map(|_| (0..self.d).map(|_| rng.random_range(*lo..=*hi)).collect())
                    .collect()
            }
        };
        OpinionState::new(&rows, self.epsilon)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::from_json_str(&text)
}
