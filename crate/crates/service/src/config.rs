use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use slopesim_core::extract::LlmBackendConfig;

pub const DATA_DIR_ENV: &str = "SLOPESIM_DATA_DIR";
pub const DEFAULT_UPLOAD_LIMIT: usize = 10 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BackendKind {
    Mock,
    Remote,
}

/// Service settings, read from a JSON file. `SLOPESIM_DATA_DIR` overrides
/// `data_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    #[serde(default = "default_backend")]
    pub backend: BackendKind,
    #[serde(default)]
    pub remote: Option<LlmBackendConfig>,
    #[serde(default = "default_upload_limit")]
    pub upload_limit_bytes: usize,
    #[serde(default = "default_media_types")]
    pub allowed_media_types: Vec<String>,
    #[serde(default = "default_tool_budget")]
    pub tool_budget_secs: u64,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("slopesim-data")
}

fn default_backend() -> BackendKind {
    BackendKind::Mock
}

fn default_upload_limit() -> usize {
    DEFAULT_UPLOAD_LIMIT
}

fn default_media_types() -> Vec<String> {
    ["image/png", "image/jpeg", "text/plain", "application/json"]
        .map(String::from)
        .to_vec()
}

fn default_tool_budget() -> u64 {
    30
}

impl Default for ServiceConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ServiceConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.apply_env();
        Ok(cfg)
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            self.data_dir = PathBuf::from(dir);
        }
    }

    /// Checks the invariants that can be checked before serving: a remote
    /// backend has its settings and its credential variable, and the data
    /// directory is writable.
    pub fn check(&self) -> anyhow::Result<()> {
        if self.backend == BackendKind::Remote {
            let Some(remote) = &self.remote else {
                bail!("backend REMOTE needs a `remote` section");
            };
            if std::env::var_os(&remote.credential_env).is_none() {
                bail!("credential variable {} is not set", remote.credential_env);
            }
        }
        fs::create_dir_all(&self.data_dir)
            .with_context(|| format!("creating data directory {}", self.data_dir.display()))?;
        let probe = self.data_dir.join(".write-probe");
        fs::write(&probe, b"").with_context(|| {
            format!("data directory {} is not writable", self.data_dir.display())
        })?;
        let _ = fs::remove_file(probe);
        Ok(())
    }

    pub fn media_type_allowed(&self, media_type: &str) -> bool {
        let base = media_type.split(';').next().unwrap_or_default().trim();
        self.allowed_media_types
            .iter()
            .any(|m| m.eq_ignore_ascii_case(base))
    }
}
