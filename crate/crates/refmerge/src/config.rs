//! Run configuration, read from TOML with the sections `corpus`, `detector`,
//! `effort` and `mining`. Every field has a default.

use std::path::Path;

use chrono::{DateTime, Utc};
use refmerge_core::corpus::CorpusFilter;
use refmerge_core::effort::{DiffOptions, EffortMode, DEFAULT_MAX_FILE_BYTES};
use refmerge_core::rules::{DEFAULT_DIRECTION_RATIO, DEFAULT_MIN_SUPPORT};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub corpus: CorpusConfig,
    pub detector: DetectorConfig,
    pub effort: EffortConfig,
    pub mining: MiningConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    #[serde(flatten)]
    pub filter: CorpusFilter,
    /// Reference date for the push-recency criterion; now when unset.
    pub as_of: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// `{repo}` and `{commit}` are substituted per invocation.
    pub command: String,
    pub timeout_secs: u64,
    pub workers: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { command: "RefactoringMiner -c {repo} {commit} -json".into(), timeout_secs: 300, workers: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffortConfig {
    pub mode: EffortMode,
    pub ignore_paths: bool,
    pub max_file_bytes: u64,
}

impl Default for EffortConfig {
    fn default() -> Self {
        EffortConfig { mode: EffortMode::default(), ignore_paths: false, max_file_bytes: DEFAULT_MAX_FILE_BYTES }
    }
}

impl EffortConfig {
    pub fn diff_options(&self) -> DiffOptions {
        DiffOptions { ignore_paths: self.ignore_paths, max_file_bytes: self.max_file_bytes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    pub min_support: f64,
    pub min_confidence: f64,
    pub direction_ratio: f64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig { min_support: DEFAULT_MIN_SUPPORT, min_confidence: 0.0, direction_ratio: DEFAULT_DIRECTION_RATIO }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Config::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Config> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Config> {
        path.map_or_else(|| Ok(Config::default()), Config::load)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.mining;
        if !(m.min_support > 0.0 && m.min_support <= 1.0) {
            return Err(Error::Config(format!("mining.min_support {} outside (0, 1]", m.min_support)));
        }
        if !(0.0..=1.0).contains(&m.min_confidence) {
            return Err(Error::Config(format!("mining.min_confidence {} outside [0, 1]", m.min_confidence)));
        }
        if !(m.direction_ratio.is_finite() && m.direction_ratio >= 1.0) {
            return Err(Error::Config(format!("mining.direction_ratio {} must be finite and >= 1", m.direction_ratio)));
        }
        if self.detector.workers == 0 {
            return Err(Error::Config("detector.workers must be at least 1".into()));
        }
        if self.detector.command.split_whitespace().next().is_none() {
            return Err(Error::Config("detector.command is empty".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, so formatting and key order in
    /// the source file do not matter.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&canonical)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
