//! Run manifest written next to every set of CSV outputs.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    /// SHA-256 of the fully resolved config in its printed TOML form.
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub workers: usize,
    /// Data rows per output file.
    pub rows: BTreeMap<String, usize>,
    pub failed_checks: usize,
}

impl RunManifest {
    pub fn new(experiment: &str, cfg: &Config, started: DateTime<Utc>, workers: usize) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_hash: config_hash(cfg),
            seed: cfg.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: String::new(),
            workers,
            rows: BTreeMap::new(),
            failed_checks: 0,
        }
    }

    pub fn finish(&mut self, at: DateTime<Utc>) {
        self.finished_at = at.to_rfc3339_opts(SecondsFormat::Millis, true);
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(format!("{}.manifest.json", self.experiment));
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, json + "\n").map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

pub fn config_hash(cfg: &Config) -> String {
    Sha256::digest(cfg.to_toml().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
