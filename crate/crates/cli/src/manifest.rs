use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use heavytail_core::TrainConfig;
use serde::Serialize;

/// Written last into every run directory; lists every file the run produced.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// Seconds since the epoch. Honors `SOURCE_DATE_EPOCH` so reruns can be
    /// byte-identical.
    pub started: u64,
    pub finished: u64,
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    pub config: TrainConfig,
}

pub fn timestamp() -> u64 {
    if let Some(fixed) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return fixed;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Manifest {
    pub fn new(command: &str, config: &TrainConfig, started: u64) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            started,
            finished: started,
            seeds: config.seeds.clone(),
            files: Vec::new(),
            checkpoint: None,
            config: config.clone(),
        }
    }

    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.finished = timestamp();
        self.files.sort();
        let text = toml::to_string(&self).context("serializing manifest")?;
        let path = dir.join("manifest.toml");
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
