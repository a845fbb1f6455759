//! TOML scenario files: the world description plus learning, orchestration
//! and evaluation settings.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use uavnet_core::{DdpgConfig, Scenario};

use crate::apc::ApcConfig;

/// Evaluation settings used for checkpoint selection and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Steady-state score is the mean score of this many final steps.
    pub steady_steps: usize,
    /// Grid spacing of the placement oracle, in area units.
    pub grid_step: f64,
    /// Reset seed of greedy evaluation rollouts.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { steady_steps: 5, grid_step: 0.25, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioFile {
    #[serde(flatten)]
    pub scenario: Scenario,
    pub rl: DdpgConfig,
    pub apc: ApcConfig,
    pub eval: EvalConfig,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let file: ScenarioFile = toml::from_str(text).context("parsing scenario file")?;
        file.scenario.validate().context("invalid scenario")?;
        anyhow::ensure!(file.apc.workers >= 1, "apc.workers must be at least 1");
        anyhow::ensure!(file.rl.batch_size >= 1, "rl.batch_size must be at least 1");
        anyhow::ensure!(file.eval.grid_step > 0.0, "eval.grid_step must be positive");
        Ok(file)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_sections() {
        let f = ScenarioFile::from_toml("name = \"x\"\n").unwrap();
        assert_eq!(f.scenario.name, "x");
        assert_eq!(f.scenario.fleet.count, 5);
        assert_eq!(f.rl.batch_size, 512);
        assert_eq!(f.apc.workers, 4);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut f = ScenarioFile::default();
        f.scenario.lineup_events.push(uavnet_core::scenario::LineupEvent::Quit { uav: 1 });
        let back = ScenarioFile::from_toml(&f.to_toml().unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_invalid_scenario() {
        let bad = "[fleet]\ncount = 0\n";
        assert!(ScenarioFile::from_toml(bad).is_err());
    }
}
