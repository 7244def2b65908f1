//! Run manifests: a config echo, its hash, and the hashes of every file
//! written by the run.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub manifest_hash: String,
    pub outputs: Vec<OutputEntry>,
}

/// Collects outputs for one run. The hash covers command, config, version
/// and seed, so reruns with the same flags produce identical files.
pub struct Recorder {
    command: String,
    config: Value,
    seed: Option<u64>,
    started_at: String,
    hash: String,
    outputs: Vec<OutputEntry>,
}

impl Recorder {
    pub fn new(command: &str, config: Value, seed: Option<u64>) -> Self {
        let identity = json!({
            "command": command,
            "config": config,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
        });
        let hash = sha256_hex(identity.to_string().as_bytes());
        Recorder {
            command: command.to_string(),
            config,
            seed,
            started_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            hash,
            outputs: Vec::new(),
        }
    }

    fn write(&mut self, path: &Path, contents: &str) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, contents)?;
        self.outputs.push(OutputEntry { path: path.display().to_string(), sha256: sha256_hex(contents.as_bytes()) });
        Ok(())
    }

    /// Writes a JSON object with a `manifest_hash` field added.
    pub fn write_json(&mut self, path: &Path, mut value: Value) -> Result<(), CliError> {
        if let Value::Object(m) = &mut value {
            m.insert("manifest_hash".into(), Value::String(self.hash.clone()));
        }
        let text = serde_json::to_string_pretty(&value).expect("json renders") + "\n";
        self.write(path, &text)
    }

    /// Writes CSV text followed by a `# manifest_hash=` comment line.
    pub fn write_csv(&mut self, path: &Path, csv: &str) -> Result<(), CliError> {
        let text = format!("{csv}# manifest_hash={}\n", self.hash);
        self.write(path, &text)
    }

    pub fn finish(self, manifest_path: &Path) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            started_at: self.started_at,
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            manifest_hash: self.hash,
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest renders") + "\n";
        fs::write(manifest_path, text)?;
        Ok(manifest_path.to_path_buf())
    }
}

/// `dir/stem.manifest.json` for an output file `dir/stem.ext`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}
