//! Run directories, atomic file emission, digests, and the run manifest.

use crate::CliError;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::PathBuf;

/// Sink that writes artifacts atomically (temp file + rename) and records a
/// SHA-256 digest for each, for the closing manifest.
pub struct RunDir {
    dir: PathBuf,
    outputs: Vec<OutputEntry>,
    started: DateTime<Utc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: String,
    pub config_echo: C,
    pub artifact_version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputEntry>,
    /// Extra command-specific facts (e.g. failure time, worst ratio).
    pub notes: serde_json::Value,
}

impl RunDir {
    pub fn create(out_dir: Option<PathBuf>) -> Result<Self, CliError> {
        let dir = out_dir.unwrap_or_else(|| {
            PathBuf::from("runs").join(Utc::now().format("%Y%m%d-%H%M%S%.3f").to_string())
        });
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir, outputs: Vec::new(), started: Utc::now() })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .map_err(|e| CliError::Io(format!("temp file in {}: {e}", self.dir.display())))?;
        std::io::Write::write_all(&mut tmp, bytes)
            .map_err(|e| CliError::Io(format!("write {name}: {e}")))?;
        let target = self.dir.join(name);
        tmp.persist(&target)
            .map_err(|e| CliError::Io(format!("rename into {}: {e}", target.display())))?;
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(format!("serialize {name}: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Close the run: write `manifest.json` (itself atomic, not listed in
    /// its own outputs).
    pub fn finish<C: Serialize>(
        mut self,
        command: &str,
        config_echo: &C,
        notes: serde_json::Value,
    ) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_echo,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            started: self.started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs: std::mem::take(&mut self.outputs),
            notes,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Io(format!("serialize manifest: {e}")))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .map_err(|e| CliError::Io(format!("temp file in {}: {e}", self.dir.display())))?;
        std::io::Write::write_all(&mut tmp, text.as_bytes())
            .map_err(|e| CliError::Io(format!("write manifest: {e}")))?;
        std::io::Write::write_all(&mut tmp, b"\n")
            .map_err(|e| CliError::Io(format!("write manifest: {e}")))?;
        let target = self.dir.join("manifest.json");
        tmp.persist(&target)
            .map_err(|e| CliError::Io(format!("rename into {}: {e}", target.display())))?;
        Ok(self.dir)
    }
}
