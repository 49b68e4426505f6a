use std::path::{Path, PathBuf};

use fairhaven_core::storage::{CostRates, LifecyclePolicy};
use serde::Deserialize;

use crate::error::ServerError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    #[default]
    Real,
    Manual,
}

impl std::str::FromStr for ClockMode {
    type Err = ServerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" => Ok(ClockMode::Real),
            "manual" => Ok(ClockMode::Manual),
            other => Err(ServerError::Config(format!("FH_CLOCK must be real or manual, got {other:?}"))),
        }
    }
}

/// A user provisioned at startup, with the bearer token that identifies them.
#[derive(Debug, Clone, Deserialize)]
pub struct UserConfig {
    pub name: String,
    pub email: String,
    pub token: String,
    #[serde(default)]
    pub admin: bool,
}

/// A workspace provisioned at startup. Members and publishers are emails.
#[derive(Debug, Clone, Deserialize)]
pub struct WorkspaceConfig {
    pub name: String,
    #[serde(default)]
    pub members: Vec<String>,
    #[serde(default)]
    pub publishers: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct WebhookSettings {
    /// Length of one backoff unit. Retries wait 1, 2 and 4 units.
    pub time_unit_ms: u64,
    pub timeout_ms: u64,
}

impl Default for WebhookSettings {
    fn default() -> Self {
        WebhookSettings {
            time_unit_ms: 1000,
            timeout_ms: 10_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Config {
    pub bind: String,
    /// Persistence root. `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub clock: ClockMode,
    pub lifecycle: LifecyclePolicy,
    pub rates: CostRates,
    pub users: Vec<UserConfig>,
    pub workspaces: Vec<WorkspaceConfig>,
    pub webhooks: WebhookSettings,
    /// Interval of the background lifecycle sweep under the real clock.
    pub sweep_interval_secs: u64,
    pub max_chunk_bytes: usize,
    /// Directory served at `/` for the browser UI, if any.
    pub static_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            bind: "127.0.0.1:8080".into(),
            data_dir: None,
            clock: ClockMode::Real,
            lifecycle: LifecyclePolicy::default(),
            rates: CostRates::default(),
            users: Vec::new(),
            workspaces: Vec::new(),
            webhooks: WebhookSettings::default(),
            sweep_interval_secs: 3600,
            max_chunk_bytes: 64 << 20,
            static_dir: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, ServerError> {
        toml::from_str(text).map_err(|e| ServerError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config, ServerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServerError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Environment overrides: `FH_DATA_DIR`, `FH_BIND_ADDR`, `FH_CLOCK`.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ServerError> {
        if let Some(dir) = get("FH_DATA_DIR").filter(|d| !d.trim().is_empty()) {
            self.data_dir = Some(PathBuf::from(dir));
        }
        if let Some(bind) = get("FH_BIND_ADDR").filter(|b| !b.trim().is_empty()) {
            self.bind = bind;
        }
        if let Some(clock) = get("FH_CLOCK").filter(|c| !c.trim().is_empty()) {
            self.clock = clock.parse()?;
        }
        Ok(())
    }
}
