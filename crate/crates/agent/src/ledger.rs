use std::path::{Path, PathBuf};

use fairhaven_core::upload::{ClientEntryView, EntryStatus, SyncView};
use fairhaven_core::Id;
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};
use crate::scan::LocalFile;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub path: String,
    pub source: PathBuf,
    pub size: u64,
    pub checksum: String,
    pub status: EntryStatus,
    pub bytes_received: u64,
}

/// Local mirror of one server manifest plus where each entry's bytes live.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub manifest_id: Id,
    pub dataset_id: Id,
    pub server_url: String,
    pub entries: Vec<LedgerEntry>,
}

pub fn ledger_dir(config_dir: &Path) -> PathBuf {
    config_dir.join("ledgers")
}

impl Ledger {
    pub fn new(manifest_id: Id, dataset_id: Id, server_url: &str, files: &[LocalFile]) -> Ledger {
        Ledger {
            manifest_id,
            dataset_id,
            server_url: server_url.to_string(),
            entries: files
                .iter()
                .map(|f| LedgerEntry {
                    path: f.rel.clone(),
                    source: f.source.clone(),
                    size: f.size,
                    checksum: f.checksum.clone(),
                    status: EntryStatus::Registered,
                    bytes_received: 0,
                })
                .collect(),
        }
    }

    pub fn file(dir: &Path, manifest: &str) -> PathBuf {
        dir.join(format!("{manifest}.json"))
    }

    pub fn load(dir: &Path, manifest: &str) -> Result<Ledger> {
        let path = Self::file(dir, manifest);
        let bytes = std::fs::read(&path)
            .map_err(|e| AgentError::Local(format!("no local ledger for manifest {manifest} ({}: {e})", path.display())))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    /// Atomic replace so a crash never leaves a torn ledger.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let path = Self::file(dir, &self.manifest_id.to_string());
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn client_views(&self) -> Vec<ClientEntryView> {
        self.entries
            .iter()
            .map(|e| ClientEntryView {
                path: e.path.clone(),
                status: e.status,
                bytes_received: e.bytes_received,
            })
            .collect()
    }

    /// Adopt the server's view of every entry. Returns the paths that changed.
    pub fn reconcile(&mut self, server: &SyncView) -> Vec<String> {
        let mut changed = Vec::new();
        for entry in &mut self.entries {
            if let Some(s) = server.entries.iter().find(|s| s.path == entry.path) {
                if s.status != entry.status || s.bytes_received != entry.bytes_received {
                    changed.push(entry.path.clone());
                }
                entry.status = s.status;
                entry.bytes_received = s.bytes_received;
            }
        }
        changed
    }

    pub fn entry_mut(&mut self, path: &str) -> Option<&mut LedgerEntry> {
        self.entries.iter_mut().find(|e| e.path == path)
    }
}
