use std::path::Path;

use anyhow::{Context, Result};
use duelforge::envcore::GameId;
use duelforge::metrics::ReportOptions;
use duelforge::ramscope::{BoundaryMode, VariationConfig};
use duelforge::trainer::{EnvSettings, ExperimentConfig, SinglePlayerSettings, TwoPlayerSettings};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RamSettings {
    pub steps: usize,
    pub seed: u64,
    pub kernel_size: usize,
    pub cap: f64,
    pub include_center: bool,
    pub boundary: BoundaryMode,
}

impl Default for RamSettings {
    fn default() -> Self {
        let v = VariationConfig::default();
        Self {
            steps: 50_000,
            seed: 0,
            kernel_size: v.kernel_size,
            cap: v.cap,
            include_center: v.include_center,
            boundary: v.boundary,
        }
    }
}

impl RamSettings {
    pub fn variation(&self) -> VariationConfig {
        VariationConfig {
            kernel_size: self.kernel_size,
            cap: self.cap,
            include_center: self.include_center,
            boundary: self.boundary,
        }
    }
}

/// Everything a command can be configured with. Sections mirror the
/// library's settings types; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub game: GameId,
    pub env: EnvSettings,
    pub single_player: SinglePlayerSettings,
    pub two_player: TwoPlayerSettings,
    pub ramscope: RamSettings,
    pub report: ReportOptions,
}

impl Default for CliConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        Self {
            game: e.game,
            env: e.env,
            single_player: e.single_player,
            two_player: e.two_player,
            ramscope: RamSettings::default(),
            report: ReportOptions::default(),
        }
    }
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            game: self.game,
            env: self.env.clone(),
            single_player: self.single_player.clone(),
            two_player: self.two_player.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Writes the resolved config into `dir` as `config_<label>.toml`.
    pub fn echo(&self, dir: &Path, label: &str) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("config_{label}.toml"));
        std::fs::write(&path, self.to_toml()).with_context(|| format!("writing {}", path.display()))
    }
}
