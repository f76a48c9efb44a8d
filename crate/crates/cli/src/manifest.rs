//! Artifact emission with a trailing, checksummed run manifest.
//!
//! Commands write their outputs through an [`Emitter`], which records each
//! file's name, byte count, and SHA-256. [`Emitter::finish`] consumes the
//! emitter and writes `manifest.json` — structurally the last write — so a
//! manifest on disk certifies that every file it lists is complete.

use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use ddb_shadow::Result;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Comment line carried by every CSV artifact.
pub fn csv_comment(seed: u64) -> String {
    format!("# ddb-shadow {ARTIFACT_VERSION} seed={seed}\n")
}

#[derive(Serialize)]
struct OutputFile {
    /// File name, relative to the manifest's directory.
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config: serde_json::Value,
    seed: u64,
    artifact_version: &'a str,
    started_at: String,
    finished_at: String,
    outputs: &'a [OutputFile],
}

pub struct Emitter {
    out_dir: PathBuf,
    started_at: DateTime<Utc>,
    outputs: Vec<OutputFile>,
}

impl Emitter {
    pub fn new(out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            started_at: Utc::now(),
            outputs: Vec::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.out_dir.join(name), bytes)?;
        self.outputs.push(OutputFile {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex_digest(bytes),
        });
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write_bytes(name, text.as_bytes())
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Writes `manifest.json` and ends the run.
    pub fn finish(self, command: &str, config: serde_json::Value, seed: u64) -> Result<()> {
        let manifest = RunManifest {
            command,
            config,
            seed,
            artifact_version: ARTIFACT_VERSION,
            started_at: self
                .started_at
                .to_rfc3339_opts(SecondsFormat::Micros, true),
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Micros, true),
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.out_dir.join("manifest.json"), text)?;
        Ok(())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Serializes a command's argument struct for the manifest's config echo.
pub fn config_echo<T: Serialize>(args: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(args)?)
}
