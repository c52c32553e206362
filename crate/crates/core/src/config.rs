//! Run configuration: one TOML file with `world`, `gains`, `training`,
//! `harness` and `paths` sections. Every key has a default; unknown keys are
//! rejected. Command-line flags override file values, which override
//! defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::Gains;
use crate::dexterity::CornerGeometry;
use crate::error::{Error, Result};
use crate::harness::HarnessConfig;
use crate::learning::TrainConfig;
use crate::world::WorldConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data_dir: PathBuf,
    pub model_dir: PathBuf,
    pub report_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            data_dir: PathBuf::from("out/data"),
            model_dir: PathBuf::from("out/models"),
            report_dir: PathBuf::from("out/reports"),
        }
    }
}

impl Paths {
    /// All three directories under `root`.
    pub fn under(root: &Path) -> Self {
        Paths { data_dir: root.join("data"), model_dir: root.join("models"), report_dir: root.join("reports") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives collection noise, the train/test split, network initialization
    /// and shuffling, and online rollout noise.
    pub seed: u64,
    pub world: WorldConfig,
    pub gains: Gains,
    pub training: TrainConfig,
    pub harness: HarnessConfig,
    /// Fingertip geometry for the minimum-radius analysis.
    pub dexterity: CornerGeometry,
    pub paths: Paths,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate_with_prefix("world.")?;
        self.gains.validate_with_prefix("gains.")?;
        self.training.validate_with_prefix("training.")?;
        self.harness.validate_with_prefix("harness.")?;
        if let Err(Error::Domain(msg)) = self.dexterity.validate() {
            let (field, rest) = msg.split_once(' ').unwrap_or(("", msg.as_str()));
            return Err(Error::ConfigRange { key: format!("dexterity.{field}"), msg: rest.to_string() });
        }
        if (self.gains.dt - self.world.dt).abs() > 1e-12 {
            return Err(Error::ConfigRange { key: "gains.dt".into(), msg: format!("must equal world.dt ({})", self.world.dt) });
        }
        for (key, p) in [
            ("paths.data_dir", &self.paths.data_dir),
            ("paths.model_dir", &self.paths.model_dir),
            ("paths.report_dir", &self.paths.report_dir),
        ] {
            if p.as_os_str().is_empty() {
                return Err(Error::ConfigRange { key: key.into(), msg: "must not be empty".into() });
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization with default paths, hex. Output
    /// locations do not change results, so they do not enter the hash.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { paths: Paths::default(), ..self.clone() };
        hex::encode(Sha256::digest(canonical.to_toml_string().as_bytes()))
    }

    /// Provenance lines embedded in every output file.
    pub fn provenance(&self) -> Vec<String> {
        vec![format!("config_hash: {}", self.hash()), format!("seed: {}", self.seed)]
    }
}

/// Reads, defaults and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::ConfigMissing(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    RunConfig::from_toml_str(&text)
}
