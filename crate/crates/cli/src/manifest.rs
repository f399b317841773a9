//! Study config files and run manifests.

use std::path::{Path, PathBuf};

use braess_core::{GridError, Result};
use serde::{Deserialize, Serialize};

use crate::commands::Study;

pub const MANIFEST_FILE: &str = "manifest.json";
const TOOL: &str = "braess";

/// A study TOML file:
///
/// ```toml
/// seed = 7            # optional, overrides ensemble seeds
/// out = "results"     # optional, relative to the config file
///
/// [study]
/// command = "nplus1"
/// network = "grid.grid"
/// factor = 2.0
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub study: Study,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| GridError::Config(e.to_string()))
    }
}

/// Everything needed to repeat a run. No timestamps, so a re-run writes
/// the same manifest again.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub study: Study,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(study: Study, seed: Option<u64>, outputs: Vec<String>) -> Self {
        Manifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            study,
            outputs,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| GridError::Config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| GridError::Config(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn check_tool(&self) -> Result<()> {
        if self.tool != TOOL {
            return Err(GridError::Config(format!("manifest was written by `{}`", self.tool)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_nested_study() {
        let cfg = StudyConfig::from_toml(
            "seed = 3\n[study]\ncommand = \"solve\"\nnetwork = \"builtin:fig1a\"\nmode = \"dc\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert!(matches!(cfg.study, Study::Solve(_)));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = StudyConfig::from_toml("[study]\ncommand = \"solve\"\nnetwork = \"x\"\nbogus = 1\n");
        assert!(matches!(err, Err(GridError::Config(_))));
        assert!(StudyConfig::from_toml("[study]\ncommand = \"teleport\"\n").is_err());
    }
}
