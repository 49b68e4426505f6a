use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};

const PROFILES_FILE: &str = "profiles.toml";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub server_url: String,
    pub token: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chunk_size: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profiles {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active: Option<String>,
    #[serde(default)]
    pub profiles: BTreeMap<String, Profile>,
}

/// `FH_CONFIG_DIR`, else the platform config directory.
pub fn default_config_dir() -> PathBuf {
    match std::env::var_os("FH_CONFIG_DIR") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => dirs::config_dir().unwrap_or_else(|| PathBuf::from(".")).join("fairhaven"),
    }
}

impl Profiles {
    pub fn load(dir: &Path) -> Result<Profiles> {
        let path = dir.join(PROFILES_FILE);
        if !path.exists() {
            return Ok(Profiles::default());
        }
        let text = std::fs::read_to_string(&path)?;
        toml::from_str(&text).map_err(|e| AgentError::Local(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = toml::to_string(self).map_err(|e| AgentError::Local(e.to_string()))?;
        std::fs::write(dir.join(PROFILES_FILE), text)?;
        Ok(())
    }

    /// Adds or replaces a profile. The first profile becomes active.
    pub fn add(&mut self, name: &str, profile: Profile) {
        self.profiles.insert(name.to_string(), profile);
        if self.active.is_none() {
            self.active = Some(name.to_string());
        }
    }

    pub fn activate(&mut self, name: &str) -> Result<()> {
        if !self.profiles.contains_key(name) {
            return Err(AgentError::Local(format!("no profile named {name:?}")));
        }
        self.active = Some(name.to_string());
        Ok(())
    }

    /// The named profile, or the active one.
    pub fn resolve(&self, name: Option<&str>) -> Result<(&str, &Profile)> {
        let name = name
            .or(self.active.as_deref())
            .ok_or_else(|| AgentError::Local("no active profile; run `fh profile add`".into()))?;
        self.profiles
            .get_key_value(name)
            .map(|(k, v)| (k.as_str(), v))
            .ok_or_else(|| AgentError::Local(format!("no profile named {name:?}")))
    }
}
