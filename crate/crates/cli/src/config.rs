use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Values read from `--config`. Every key is optional; command-line flags
/// take precedence, and `MEDSQL_TRANSLATE_URL` overrides both for the
/// translation endpoint.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub assignment: Option<PathBuf>,
    pub preds: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,

    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub timeout_ms: Option<u64>,

    pub test_size: Option<usize>,
    pub designated_tables: Option<Vec<String>>,

    pub strict: Option<bool>,
    pub breakdown: Option<bool>,
    pub require_nonempty: Option<bool>,
    pub prefilter: Option<bool>,

    pub question_source: Option<String>,
    pub separator: Option<String>,

    pub pivots: Option<Vec<String>>,
    pub allowed_pivots: Option<Vec<String>>,
    pub endpoint: Option<String>,
    pub retries: Option<u32>,
    pub translate_timeout_ms: Option<u64>,
    pub limit_per_template: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(RunConfig::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    /// Output path: the flag, else `out_dir/<default_name>`, else `./<default_name>`.
    pub fn output(&self, flag: Option<PathBuf>, default_name: &str) -> PathBuf {
        flag.unwrap_or_else(|| self.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")).join(default_name))
    }
}

/// A boolean switch: set by the flag, else by the config, else off.
pub fn switch(flag: bool, from_config: Option<bool>) -> bool {
    flag || from_config.unwrap_or(false)
}
