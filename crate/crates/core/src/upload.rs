//! Upload manifests: the server-side ledger behind resumable uploads.
//!
//! Each entry moves `registered → in_progress → uploaded → verified`, or to
//! `failed` when the staged bytes do not hash to the declared checksum. A
//! failed entry only leaves that state through an explicit reset. Chunks for
//! one entry are strictly sequential; the current `bytes_received` is the
//! single resume offset.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::id::{is_sha256_hex, sha256_hex, Id};
use crate::tree::split_path;

/// Largest declarable file: 5 TiB.
pub const MAX_FILE_SIZE: u64 = 5 * (1 << 40);
pub const DEFAULT_CHUNK_SIZE: u64 = 5 * (1 << 20);
pub const MIN_CHUNK_SIZE: u64 = 64 * (1 << 10);
pub const MAX_CHUNK_SIZE: u64 = 64 * (1 << 20);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Registered,
    InProgress,
    Uploaded,
    Verified,
    Failed,
}

impl EntryStatus {
    pub fn is_pending(self) -> bool {
        matches!(self, EntryStatus::Registered | EntryStatus::InProgress | EntryStatus::Uploaded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestState {
    Open,
    Finalized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntrySpec {
    pub path: String,
    pub size: u64,
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecksumMismatch {
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ChunkReceipt {
    offset: u64,
    len: u64,
    sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub declared_size: u64,
    pub declared_checksum: String,
    pub status: EntryStatus,
    pub bytes_received: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<ChecksumMismatch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    last_chunk: Option<ChunkReceipt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadManifest {
    pub id: Id,
    pub dataset_id: Id,
    pub created_by: Id,
    pub created_at: DateTime<Utc>,
    pub entries: Vec<ManifestEntry>,
    pub state: ManifestState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkAck {
    pub path: String,
    pub bytes_received: u64,
    pub status: EntryStatus,
    /// True when the chunk repeated the last acknowledged one and was ignored.
    pub duplicate: bool,
}

/// What to do with an incoming chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkPlan {
    /// Write the bytes into staging at this offset.
    Write { offset: u64 },
    /// Retransmission of the last acknowledged chunk; acknowledge without writing.
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub total: u64,
    pub verified: u64,
    pub failed: u64,
    pub pending: u64,
    pub complete: bool,
}

/// What a client believes about an entry. Advisory only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientEntryView {
    pub path: String,
    pub status: EntryStatus,
    pub bytes_received: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryView {
    pub path: String,
    pub declared_size: u64,
    pub declared_checksum: String,
    pub status: EntryStatus,
    pub bytes_received: u64,
    /// Where the next chunk must start.
    pub resume_offset: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<ChecksumMismatch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncView {
    pub manifest_id: Id,
    pub dataset_id: Id,
    pub state: ManifestState,
    pub entries: Vec<EntryView>,
    /// Paths where the client view disagreed with the server.
    pub conflicts: Vec<String>,
}

/// Canonical form of a dataset-relative upload path.
pub fn normalize_upload_path(path: &str) -> Result<String> {
    if path.starts_with('/') {
        return Err(Error::InvalidArgument(format!("upload path {path:?} must be relative")));
    }
    let cleaned: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
    let cleaned = cleaned.join("/");
    let parts = split_path(&cleaned)?;
    if parts.is_empty() {
        return Err(Error::InvalidArgument("empty upload path".into()));
    }
    Ok(parts.join("/"))
}

fn check_specs(specs: &[EntrySpec], existing: &[ManifestEntry]) -> Result<Vec<ManifestEntry>> {
    let mut seen: BTreeSet<String> = existing.iter().map(|e| e.path.clone()).collect();
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let path = normalize_upload_path(&spec.path)?;
        if spec.size > MAX_FILE_SIZE {
            return Err(Error::FileTooLarge { path, size: spec.size });
        }
        if !is_sha256_hex(&spec.checksum) {
            return Err(Error::InvalidArgument(format!(
                "checksum for {path:?} is not a SHA-256 hex digest"
            )));
        }
        if !seen.insert(path.clone()) {
            return Err(Error::DuplicatePath(path));
        }
        out.push(ManifestEntry {
            path,
            declared_size: spec.size,
            declared_checksum: spec.checksum.to_ascii_lowercase(),
            status: EntryStatus::Registered,
            bytes_received: 0,
            mismatch: None,
            last_chunk: None,
        });
    }
    Ok(out)
}

impl UploadManifest {
    pub fn new(id: Id, dataset_id: Id, created_by: Id, now: DateTime<Utc>, specs: &[EntrySpec]) -> Result<Self> {
        Ok(UploadManifest {
            id,
            dataset_id,
            created_by,
            created_at: now,
            entries: check_specs(specs, &[])?,
            state: ManifestState::Open,
        })
    }

    pub fn add_entries(&mut self, specs: &[EntrySpec]) -> Result<()> {
        if self.state == ManifestState::Finalized {
            return Err(Error::ManifestFinalized);
        }
        let added = check_specs(specs, &self.entries)?;
        self.entries.extend(added);
        Ok(())
    }

    pub fn entry(&self, path: &str) -> Result<&ManifestEntry> {
        self.entries
            .iter()
            .find(|e| e.path == path)
            .ok_or_else(|| Error::EntryNotFound(path.to_string()))
    }

    fn entry_mut(&mut self, path: &str) -> Result<&mut ManifestEntry> {
        self.entries
            .iter_mut()
            .find(|e| e.path == path)
            .ok_or_else(|| Error::EntryNotFound(path.to_string()))
    }

    /// Staging object key for an entry.
    pub fn staging_key(&self, path: &str) -> String {
        format!("staging/{}/{}", self.id, path)
    }

    pub fn staging_prefix(&self) -> String {
        format!("staging/{}/", self.id)
    }

    pub fn plan_chunk(&self, path: &str, offset: u64, bytes: &[u8]) -> Result<ChunkPlan> {
        if self.state == ManifestState::Finalized {
            return Err(Error::ManifestFinalized);
        }
        let entry = self.entry(path)?;
        let len = bytes.len() as u64;
        if let Some(last) = &entry.last_chunk {
            if last.offset == offset && last.len == len && len > 0 && last.sha256 == sha256_hex(bytes) {
                return Ok(ChunkPlan::Duplicate);
            }
        }
        if entry.status == EntryStatus::Failed {
            return Err(Error::EntryFailed(entry.path.clone()));
        }
        if offset != entry.bytes_received {
            return Err(Error::OffsetMismatch {
                expected: entry.bytes_received,
            });
        }
        if offset + len > entry.declared_size {
            return Err(Error::Overflow {
                declared: entry.declared_size,
            });
        }
        Ok(ChunkPlan::Write { offset })
    }

    /// Record a chunk that `plan_chunk` approved and staging accepted.
    pub fn record_chunk(&mut self, path: &str, offset: u64, bytes: &[u8]) -> Result<ChunkAck> {
        let entry = self.entry_mut(path)?;
        let len = bytes.len() as u64;
        if len > 0 {
            entry.bytes_received = offset + len;
            entry.last_chunk = Some(ChunkReceipt {
                offset,
                len,
                sha256: sha256_hex(bytes),
            });
            if entry.status == EntryStatus::Registered {
                entry.status = EntryStatus::InProgress;
            }
            if entry.status == EntryStatus::InProgress && entry.bytes_received == entry.declared_size {
                entry.status = EntryStatus::Uploaded;
            }
        }
        Ok(self.ack(path, false))
    }

    pub fn ack(&self, path: &str, duplicate: bool) -> ChunkAck {
        let entry = self.entry(path).expect("caller checked entry");
        ChunkAck {
            path: entry.path.clone(),
            bytes_received: entry.bytes_received,
            status: entry.status,
            duplicate,
        }
    }

    /// Entry must hold every declared byte before its checksum is checked.
    pub fn check_finalizable(&self, path: &str) -> Result<&ManifestEntry> {
        let entry = self.entry(path)?;
        if entry.bytes_received < entry.declared_size {
            return Err(Error::Incomplete {
                received: entry.bytes_received,
                declared: entry.declared_size,
            });
        }
        Ok(entry)
    }

    /// Apply the outcome of hashing the staged bytes.
    pub fn settle(&mut self, path: &str, actual_checksum: &str) -> Result<EntryStatus> {
        let entry = self.entry_mut(path)?;
        if actual_checksum == entry.declared_checksum {
            entry.status = EntryStatus::Verified;
            entry.mismatch = None;
        } else {
            entry.status = EntryStatus::Failed;
            entry.mismatch = Some(ChecksumMismatch {
                expected: entry.declared_checksum.clone(),
                actual: actual_checksum.to_string(),
            });
        }
        Ok(entry.status)
    }

    /// `failed → registered`, ready for a re-upload from offset 0.
    pub fn reset(&mut self, path: &str) -> Result<()> {
        if self.state == ManifestState::Finalized {
            return Err(Error::ManifestFinalized);
        }
        let entry = self.entry_mut(path)?;
        if entry.status != EntryStatus::Failed {
            return Err(Error::IllegalTransition {
                state: format!("{:?}", entry.status).to_lowercase(),
                event: "reset".into(),
            });
        }
        entry.status = EntryStatus::Registered;
        entry.bytes_received = 0;
        entry.last_chunk = None;
        Ok(())
    }

    pub fn verification(&self) -> Verification {
        let total = self.entries.len() as u64;
        let count = |s: EntryStatus| self.entries.iter().filter(|e| e.status == s).count() as u64;
        let verified = count(EntryStatus::Verified);
        let failed = count(EntryStatus::Failed);
        let pending = self.entries.iter().filter(|e| e.status.is_pending()).count() as u64;
        Verification {
            total,
            verified,
            failed,
            pending,
            complete: failed == 0 && pending == 0,
        }
    }

    pub fn sync_view(&self, client: &[ClientEntryView]) -> SyncView {
        let entries: Vec<EntryView> = self
            .entries
            .iter()
            .map(|e| EntryView {
                path: e.path.clone(),
                declared_size: e.declared_size,
                declared_checksum: e.declared_checksum.clone(),
                status: e.status,
                bytes_received: e.bytes_received,
                resume_offset: e.bytes_received,
                mismatch: e.mismatch.clone(),
            })
            .collect();
        let conflicts = client
            .iter()
            .filter(|c| {
                entries
                    .iter()
                    .find(|e| e.path == c.path)
                    .is_none_or(|e| e.status != c.status || e.bytes_received != c.bytes_received)
            })
            .map(|c| c.path.clone())
            .collect();
        SyncView {
            manifest_id: self.id,
            dataset_id: self.dataset_id,
            state: self.state,
            entries,
            conflicts,
        }
    }
}
