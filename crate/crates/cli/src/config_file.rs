//! JSON device files.
//!
//! ```json
//! {"kappa": 100, "delta_unit": 1, "symmetric": true,
//!  "absorbers": [{"detuning": -0.5, "g": 0.318, "gamma": 1e-4}, ...]}
//! ```
//!
//! Frequencies, couplings and losses are in units of `delta_unit`. An optional
//! `manifest` object written by this tool is accepted and ignored.

use std::path::Path;

use qmem_core::{Absorber, MemoryConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorberEntry {
    pub detuning: f64,
    pub g: f64,
    #[serde(default)]
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kappa: f64,
    #[serde(default = "unit")]
    pub delta_unit: f64,
    pub absorbers: Vec<AbsorberEntry>,
    #[serde(default)]
    pub symmetric: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<serde_json::Value>,
}

fn unit() -> f64 {
    1.0
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_config(config: &MemoryConfig) -> Self {
        Self {
            kappa: config.kappa(),
            delta_unit: config.unit_delta(),
            absorbers: config
                .absorbers()
                .iter()
                .map(|a| AbsorberEntry {
                    detuning: a.detuning,
                    g: a.g,
                    gamma: a.gamma,
                })
                .collect(),
            symmetric: config.is_declared_symmetric(),
            manifest: None,
        }
    }

    /// Validated model configuration.
    pub fn to_config(&self) -> Result<MemoryConfig, CliError> {
        let absorbers = self
            .absorbers
            .iter()
            .map(|a| Absorber::new(a.detuning, a.g, a.gamma))
            .collect();
        MemoryConfig::with_unit(self.kappa, absorbers, self.symmetric, self.delta_unit)
            .map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// SHA-256 of the canonical JSON of the device fields.
    pub fn hash(&self) -> String {
        let bare = Self {
            manifest: None,
            ..self.clone()
        };
        let canonical = serde_json::to_string(&bare).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
