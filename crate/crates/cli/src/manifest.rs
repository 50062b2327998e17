//! Append-only run manifests, one JSON document per line.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::Config;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: Config,
    pub seeds: Vec<u64>,
    pub version: String,
    pub started_ms: u128,
    pub finished_ms: u128,
    pub outputs: Vec<PathBuf>,
    /// Command-specific summary numbers.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str, config: &Config) -> Self {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().collect(),
            config: config.clone(),
            seeds: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_ms: now_ms(),
            finished_ms: 0,
            outputs: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    /// Stamp the end time and append to the manifest file in `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<()> {
        self.finished_ms = now_ms();
        let path = dir.join(MANIFEST_FILE);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .with_context(|| format!("opening {}", path.display()))?;
        let mut line = serde_json::to_string(&self)?;
        line.push('\n');
        f.write_all(line.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
pub fn read_manifests(dir: &Path) -> Result<Vec<RunManifest>> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).context("parsing manifest line"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifests_append_one_line_each() {
        let dir = tempfile::tempdir().unwrap();
        let config = Config::default();
        for cmd in ["ingest", "simulate"] {
            let mut m = RunManifest::start(cmd, &config);
            m.seeds = vec![3, 4];
            m.outputs = vec![dir.path().join(format!("{cmd}.csv"))];
            m.finish(dir.path()).unwrap();
        }
        let all = read_manifests(dir.path()).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].command, "ingest");
        assert_eq!(all[1].seeds, vec![3, 4]);
        assert!(all[1].finished_ms >= all[1].started_ms);
        assert_eq!(all[0].config, config);
    }
}
