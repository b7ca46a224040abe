use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use medsql::io::{write_atomic, FORMAT_VERSION};

use crate::error::{CliError, CliResult, ExitKind};

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// Run record written next to every output as `<output>.manifest.json`.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    format_version: u32,
    tool: &'static str,
    tool_version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    config_hash: String,
    config: &'a Value,
    inputs: Vec<FileDigest>,
    output: FileDigest,
    #[serde(skip_serializing_if = "Value::is_null")]
    summary: &'a Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::new(ExitKind::Data, anyhow::anyhow!("{}: {e}", path.display())))?;
    Ok(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Everything a command needs to describe its run.
pub struct RunRecord<'a> {
    pub command: &'a str,
    pub seed: Option<u64>,
    /// Effective settings after merging config, flags and environment.
    pub config: Value,
    pub inputs: Vec<PathBuf>,
}

impl RunRecord<'_> {
    pub fn write(&self, output: &Path, summary: &Value) -> CliResult<()> {
        let config_bytes = serde_json::to_vec(&self.config).expect("config serializes");
        let m = Manifest {
            format_version: FORMAT_VERSION,
            tool: "medsql",
            tool_version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.seed,
            config_hash: sha256_hex(&config_bytes),
            config: &self.config,
            inputs: self.inputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
            output: digest(output)?,
            summary,
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
        write_atomic(&manifest_path(output), text.as_bytes())
            .map_err(|e| CliError::new(ExitKind::Environment, e))
    }
}
