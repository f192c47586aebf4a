//! Experiment configuration files.
//!
//! The format is TOML restricted to three flat sections:
//!
//! ```toml
//! [experiment]
//! oracles = ["hypersphere:m=20,r=0.5"]   # required, one or more oracle specs
//! samplers = ["lhs", "srs"]              # default both
//! budgets = [1000, 5000, 20000]          # default
//! repetitions = 10                       # default 1, must be >= 1
//! base_seed = 0
//! output_dir = "bench-out"               # optional; nothing is written without it
//! oracle_timeout_secs = 10.0             # external oracles only
//! workers = 0                            # 0 = one per core
//!
//! [points]
//! source = "default"                     # default | file | random
//! path = "points.txt"                    # source = "file"
//! count = 5                              # random: how many; file: optional cap
//! seed = 0                               # random
//! targets_path = "targets.txt"           # targeted attacks: one start image per original
//!
//! [attack]
//! initial_samples = 100
//! iterations = 64
//! theta = 0.001                          # optional, default m^(-3/2)
//! max_queries = 20000                    # optional, default max(budgets)
//! mode = "untargeted"                    # or "targeted"
//! max_init_tries = 1000
//! max_step_retries = 30
//! clip_low = 0.0
//! clip_high = 1.0
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{invalid, HarnessError};
use crate::attack::{AttackConfig, AttackMode};
use crate::oracle::OracleSpec;
use crate::sampler::SamplerKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub points: PointsSection,
    #[serde(default)]
    pub attack: AttackSection,
}

fn default_samplers() -> Vec<SamplerKind> {
    vec![SamplerKind::Lhs, SamplerKind::Srs]
}

fn default_budgets() -> Vec<u64> {
    vec![1_000, 5_000, 20_000]
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub oracles: Vec<String>,
    #[serde(default = "default_samplers")]
    pub samplers: Vec<SamplerKind>,
    #[serde(default = "default_budgets")]
    pub budgets: Vec<u64>,
    #[serde(default = "one")]
    pub repetitions: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_timeout_secs: Option<f64>,
    #[serde(default)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSource {
    /// The oracle's natural original (analytic oracles only).
    #[default]
    Default,
    File,
    /// Uniform draws from the clip box, keeping benign ones.
    Random,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsSection {
    #[serde(default)]
    pub source: PointSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Untargeted,
    Targeted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub initial_samples: usize,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_queries: Option<u64>,
    pub mode: ModeName,
    pub max_init_tries: u32,
    pub max_step_retries: u32,
    pub clip_low: f64,
    pub clip_high: f64,
}

impl Default for AttackSection {
    fn default() -> Self {
        let d = AttackConfig::default();
        Self {
            initial_samples: d.initial_samples,
            iterations: d.iterations,
            theta: d.theta,
            max_queries: d.max_queries,
            mode: ModeName::Untargeted,
            max_init_tries: d.max_init_tries,
            max_step_retries: d.max_step_retries,
            clip_low: d.clip_low,
            clip_high: d.clip_high,
        }
    }
}

// Every field of the attack section is optional in the file.
impl AttackSection {
    fn fill(raw: RawAttack) -> Self {
        let d = Self::default();
        Self {
            initial_samples: raw.initial_samples.unwrap_or(d.initial_samples),
            iterations: raw.iterations.unwrap_or(d.iterations),
            theta: raw.theta,
            max_queries: raw.max_queries,
            mode: raw.mode.unwrap_or(d.mode),
            max_init_tries: raw.max_init_tries.unwrap_or(d.max_init_tries),
            max_step_retries: raw.max_step_retries.unwrap_or(d.max_step_retries),
            clip_low: raw.clip_low.unwrap_or(d.clip_low),
            clip_high: raw.clip_high.unwrap_or(d.clip_high),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttack {
    initial_samples: Option<usize>,
    iterations: Option<usize>,
    theta: Option<f64>,
    max_queries: Option<u64>,
    mode: Option<ModeName>,
    max_init_tries: Option<u32>,
    max_step_retries: Option<u32>,
    clip_low: Option<f64>,
    clip_high: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentSection,
    #[serde(default)]
    points: PointsSection,
    #[serde(default)]
    attack: RawAttack,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let config = Self {
            experiment: raw.experiment,
            points: raw.points,
            attack: AttackSection::fill(raw.attack),
        };
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config file. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let Some(base) = path.parent() {
            config.resolve_relative_to(base);
        }
        Ok(config)
    }

    fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut self.points.path);
        fix(&mut self.points.targets_path);
        fix(&mut self.experiment.output_dir);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let e = &self.experiment;
        if e.oracles.is_empty() {
            return Err(invalid("experiment.oracles", "at least one oracle is required"));
        }
        for (i, text) in e.oracles.iter().enumerate() {
            // External oracles are only checked syntactically here.
            if let Err(err) = OracleSpec::parse(text) {
                return Err(invalid(format!("experiment.oracles[{i}]"), err.to_string()));
            }
        }
        if e.samplers.is_empty() {
            return Err(invalid("experiment.samplers", "at least one sampler is required"));
        }
        if e.budgets.is_empty() || e.budgets.contains(&0) {
            return Err(invalid("experiment.budgets", "budgets must be a non-empty list of positive counts"));
        }
        if e.repetitions == 0 {
            return Err(invalid("experiment.repetitions", "must be at least 1"));
        }
        if let Some(t) = e.oracle_timeout_secs {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("experiment.oracle_timeout_secs", "must be positive"));
            }
        }
        let p = &self.points;
        match p.source {
            PointSource::File if p.path.is_none() => {
                return Err(invalid("points.path", "required when source = \"file\""))
            }
            PointSource::Random if p.count.unwrap_or(0) == 0 => {
                return Err(invalid("points.count", "random points need a positive count"))
            }
            _ => {}
        }
        if p.count == Some(0) {
            return Err(invalid("points.count", "must be positive"));
        }
        if self.attack.mode == ModeName::Targeted && p.targets_path.is_none() {
            return Err(invalid("points.targets_path", "targeted attacks need start images"));
        }
        let probe_target = (self.attack.mode == ModeName::Targeted).then(Vec::new);
        self.attack_config(0, SamplerKind::Lhs, probe_target)
            .validate()
            .map_err(|err| invalid("attack", err.to_string()))?;
        Ok(())
    }

    pub fn oracle_specs(&self) -> Result<Vec<OracleSpec>, HarnessError> {
        let timeout = self.experiment.oracle_timeout_secs.map(Duration::from_secs_f64);
        self.experiment
            .oracles
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let spec = OracleSpec::parse(text).map_err(|e| invalid(format!("experiment.oracles[{i}]"), e.to_string()))?;
                Ok(match timeout {
                    Some(t) => spec.with_timeout(t),
                    None => spec,
                })
            })
            .collect()
    }

    /// Attack settings for one run. The query cap defaults to the largest
    /// reporting budget.
    pub fn attack_config(&self, seed: u64, sampler: SamplerKind, init_target: Option<Vec<f64>>) -> AttackConfig {
        let a = &self.attack;
        let max_budget = self.experiment.budgets.iter().copied().max();
        AttackConfig {
            initial_samples: a.initial_samples,
            iterations: a.iterations,
            theta: a.theta,
            max_queries: a.max_queries.or(max_budget),
            sampler,
            mode: match a.mode {
                ModeName::Untargeted => AttackMode::Untargeted,
                ModeName::Targeted => AttackMode::Targeted,
            },
            seed,
            init_target,
            max_init_tries: a.max_init_tries,
            max_step_retries: a.max_step_retries,
            clip_low: a.clip_low,
            clip_high: a.clip_high,
        }
    }
}
