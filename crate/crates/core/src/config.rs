//! Pipeline configuration, read from a TOML document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::RewardConfig;
use crate::sim::WorldParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub world: WorldParams,
    pub reward: RewardConfig,
    pub rl: RlConfig,
    pub mixture: MixtureConfig,
    pub pretrain: BcConfig,
    pub distill: DistillConfig,
    pub forge: ForgeConfig,
    pub eval: EvalConfig,
    /// Upper bound on enumerated candidates per input.
    pub max_candidates: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 7,
            world: WorldParams::default(),
            reward: RewardConfig::default(),
            rl: RlConfig::default(),
            mixture: MixtureConfig::default(),
            pretrain: BcConfig::default(),
            distill: DistillConfig::default(),
            forge: ForgeConfig::default(),
            eval: EvalConfig::default(),
            max_candidates: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    /// Rollouts per item.
    pub k: usize,
    /// Rollout sampling temperature.
    pub temperature: f64,
    pub lr: f64,
    pub steps: usize,
    pub batch_size: usize,
    /// Probability that a rollout is rendered without its closing tag.
    pub corruption_rate: f64,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self { k: 16, temperature: 1.0, lr: 0.05, steps: 400, batch_size: 32, corruption_rate: 0.0 }
    }
}

/// Relative weights of the training pools; agent items are split between
/// low and high conditioning by `low_fraction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureConfig {
    pub agent: f64,
    pub scenario: f64,
    pub point: f64,
    pub bbox: f64,
    pub other: f64,
    pub low_fraction: f64,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self { agent: 10.0, scenario: 2.0, point: 5.0, bbox: 4.0, other: 11.0, low_fraction: 0.5 }
    }
}

/// Behavior-cloning schedule: full-batch gradient steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcConfig {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for BcConfig {
    fn default() -> Self {
        Self { epochs: 100, lr: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    pub noise_rate: f64,
    pub sft: BcConfig,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self { noise_rate: 0.1, sft: BcConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForgeConfig {
    pub n_sample: usize,
    pub temperature: f64,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        Self { n_sample: 16, temperature: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Fraction of tasks (the last ones) held out from training.
    pub holdout_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { holdout_fraction: 0.2 }
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.reward.validate()?;
        if self.rl.k < 2 {
            return Err(Error::Config("rl.k must be at least 2".into()));
        }
        positive("rl.temperature", self.rl.temperature)?;
        positive("forge.temperature", self.forge.temperature)?;
        if !(self.rl.lr >= 0.0 && self.pretrain.lr >= 0.0 && self.distill.sft.lr >= 0.0) {
            return Err(Error::Config("learning rates must be non-negative".into()));
        }
        if self.forge.n_sample < 2 {
            return Err(Error::Config("forge.n_sample must be at least 2".into()));
        }
        probability("rl.corruption_rate", self.rl.corruption_rate)?;
        probability("distill.noise_rate", self.distill.noise_rate)?;
        probability("mixture.low_fraction", self.mixture.low_fraction)?;
        probability("eval.holdout_fraction", self.eval.holdout_fraction)?;
        let m = &self.mixture;
        if [m.agent, m.scenario, m.point, m.bbox, m.other].iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("mixture weights must be non-negative".into()));
        }
        if self.max_candidates == 0 {
            return Err(Error::Config("max_candidates must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let c: Config = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// `path` if given, else the defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = Config::default();
        c.validate().unwrap();
        assert_eq!(Config::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        assert_eq!(c.rl.k, 16);
        assert_eq!(c.forge.n_sample, 16);
        assert_eq!(c.forge.temperature, 1.5);
    }

    #[test]
    fn partial_documents_and_rejections() {
        let c = Config::from_toml("seed = 3\n[rl]\nk = 4\n").unwrap();
        assert_eq!((c.seed, c.rl.k, c.rl.lr), (3, 4, 0.05));
        assert!(Config::from_toml("[rl]\nk = 1\n").is_err());
        assert!(Config::from_toml("[distill]\nnoise_rate = 2.0\n").is_err());
        assert!(Config::from_toml("bogus = 1\n").is_err());
    }
}
