use std::path::Path;

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use meantest_core::Seed;
use serde::Serialize;

/// Everything needed to re-run a command and get the same payload back.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector of the invocation.
    pub args: Vec<String>,
    /// Tester config or experiment plan, after command-line overrides.
    pub config: serde_json::Value,
    pub seed: Option<Seed>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<Seed>, started: DateTime<Utc>) -> Self {
        RunManifest {
            command: command.to_owned(),
            args: std::env::args().collect(),
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            started_at: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
