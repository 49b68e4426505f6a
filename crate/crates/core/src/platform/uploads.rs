use serde::{Deserialize, Serialize};

use super::datasets::file_object_key;
use super::{Platform, Txn};
use crate::access::Action;
use crate::dataset::ActivityAction;
use crate::error::{Error, Result};
use crate::events::EventKind;
use crate::id::{sha256_hex, Id};
use crate::tree::{split_path, NodeKind};
use crate::upload::{
    ChecksumMismatch, ChunkAck, ChunkPlan, ClientEntryView, EntrySpec, EntryStatus, ManifestState, SyncView,
    UploadManifest, Verification,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalizeOutcome {
    pub path: String,
    pub status: EntryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<ChecksumMismatch>,
    /// Tree node holding the verified bytes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_id: Option<Id>,
}

impl Txn<'_> {
    fn manifest(&self, id: Id) -> Result<&UploadManifest> {
        self.state
            .manifests
            .get(&id)
            .ok_or_else(|| Error::NotFound(format!("manifest {id}")))
    }

    fn manifest_mut(&mut self, id: Id) -> Result<&mut UploadManifest> {
        self.state
            .manifests
            .get_mut(&id)
            .ok_or_else(|| Error::NotFound(format!("manifest {id}")))
    }

    /// Put verified bytes at `path` in the dataset tree, creating parents.
    fn materialize(&mut self, dataset: Id, path: &str, bytes: &[u8], checksum: &str) -> Result<Id> {
        let parts = split_path(path)?;
        let (name, folders) = parts.split_last().expect("normalized path is non-empty");
        let ids = self.ids;
        let tree = &mut self.state.record_mut(dataset)?.dataset.tree;
        let parent = tree.ensure_folders(folders, || ids.lock().expect("id generator poisoned").next_id())?;
        let node = match tree.live_child_named(parent, name) {
            Some(existing) => {
                if tree.node(existing).map(|n| n.kind) != Some(NodeKind::File) {
                    return Err(Error::SiblingConflict(name.to_string()));
                }
                tree.update_file(existing, bytes.len() as u64, checksum.to_string())?;
                existing
            }
            None => {
                let id = ids.lock().expect("id generator poisoned").next_id();
                let key = file_object_key(dataset, id);
                tree.add_file(parent, name, id, bytes.len() as u64, checksum.to_string(), key)?
            }
        };
        let key = file_object_key(dataset, node);
        let key = tree.node(node).and_then(|n| n.object_key.clone()).unwrap_or(key);
        self.store.put(&key, bytes)?;
        Ok(node)
    }
}

impl Platform {
    pub fn create_manifest(&self, dataset: Id, caller: Id, entries: &[EntrySpec]) -> Result<UploadManifest> {
        self.write(|txn| {
            txn.state.authorized(dataset, caller, Action::UploadFiles)?;
            txn.state.ensure_unlocked(dataset)?;
            let manifest = UploadManifest::new(txn.new_id(), dataset, caller, txn.now, entries)?;
            txn.state.manifests.insert(manifest.id, manifest.clone());
            Ok(manifest)
        })
    }

    pub fn add_manifest_entries(&self, manifest: Id, caller: Id, entries: &[EntrySpec]) -> Result<UploadManifest> {
        self.write(|txn| {
            let dataset = txn.manifest(manifest)?.dataset_id;
            txn.state.authorized(dataset, caller, Action::UploadFiles)?;
            let m = txn.manifest_mut(manifest)?;
            m.add_entries(entries)?;
            Ok(m.clone())
        })
    }

    pub fn manifest(&self, manifest: Id, caller: Id) -> Result<UploadManifest> {
        let state = self.read();
        let m = state
            .manifests
            .get(&manifest)
            .ok_or_else(|| Error::NotFound(format!("manifest {manifest}")))?;
        state.authorized(m.dataset_id, caller, Action::ViewFiles)?;
        Ok(m.clone())
    }

    pub fn upload_chunk(&self, manifest: Id, caller: Id, path: &str, offset: u64, bytes: &[u8]) -> Result<ChunkAck> {
        self.write(|txn| {
            let m = txn.manifest(manifest)?;
            txn.state.authorized(m.dataset_id, caller, Action::UploadFiles)?;
            match m.plan_chunk(path, offset, bytes)? {
                ChunkPlan::Duplicate => Ok(m.ack(path, true)),
                ChunkPlan::Write { offset } => {
                    let key = m.staging_key(path);
                    if !bytes.is_empty() {
                        txn.store.write_at(&key, offset, bytes)?;
                    }
                    txn.manifest_mut(manifest)?.record_chunk(path, offset, bytes)
                }
            }
        })
    }

    /// Hash the staged bytes and settle the entry. A verified entry appears in
    /// the dataset tree; when every entry is verified the manifest finalizes.
    pub fn finalize_entry(&self, manifest: Id, caller: Id, path: &str) -> Result<FinalizeOutcome> {
        self.write(|txn| {
            let m = txn.manifest(manifest)?;
            let dataset = m.dataset_id;
            txn.state.authorized(dataset, caller, Action::UploadFiles)?;
            let entry = m.check_finalizable(path)?;
            let path = entry.path.clone();
            if entry.status == EntryStatus::Verified {
                return Ok(FinalizeOutcome {
                    path: path.clone(),
                    status: EntryStatus::Verified,
                    mismatch: None,
                    file_id: txn.state.record(dataset)?.dataset.tree.resolve(&path, false).ok(),
                });
            }
            if m.state == ManifestState::Finalized {
                return Err(Error::ManifestFinalized);
            }
            txn.state.ensure_unlocked(dataset)?;
            let key = m.staging_key(&path);
            let bytes = if entry.declared_size == 0 {
                Vec::new()
            } else {
                txn.store.get(&key, None)?
            };
            let actual = sha256_hex(&bytes);
            let status = txn.manifest_mut(manifest)?.settle(&path, &actual)?;
            if status != EntryStatus::Verified {
                let mismatch = txn.manifest(manifest)?.entry(&path)?.mismatch.clone();
                return Ok(FinalizeOutcome {
                    path,
                    status,
                    mismatch,
                    file_id: None,
                });
            }
            let node = txn.materialize(dataset, &path, &bytes, &actual)?;
            txn.store.purge(&key)?;
            txn.log(
                dataset,
                caller,
                ActivityAction::Uploaded,
                format!("uploaded {path} ({} bytes)", bytes.len()),
            )?;
            let m = txn.manifest_mut(manifest)?;
            let verification = m.verification();
            if verification.complete {
                m.state = ManifestState::Finalized;
                txn.emit(
                    EventKind::ManifestCompleted,
                    dataset,
                    serde_json::json!({ "manifest_id": manifest, "entries": verification.total }),
                );
            }
            Ok(FinalizeOutcome {
                path,
                status,
                mismatch: None,
                file_id: Some(node),
            })
        })
    }

    /// `failed → registered`; the entry is re-uploaded from offset 0.
    pub fn reset_entry(&self, manifest: Id, caller: Id, path: &str) -> Result<ChunkAck> {
        self.write(|txn| {
            let dataset = txn.manifest(manifest)?.dataset_id;
            txn.state.authorized(dataset, caller, Action::UploadFiles)?;
            let m = txn.manifest_mut(manifest)?;
            m.reset(path)?;
            Ok(m.ack(path, false))
        })
    }

    pub fn verify_manifest(&self, manifest: Id, caller: Id) -> Result<Verification> {
        Ok(self.manifest(manifest, caller)?.verification())
    }

    pub fn sync_manifest(&self, manifest: Id, caller: Id, client: &[ClientEntryView]) -> Result<SyncView> {
        Ok(self.manifest(manifest, caller)?.sync_view(client))
    }

    pub fn manifests_for(&self, dataset: Id, caller: Id) -> Result<Vec<UploadManifest>> {
        let state = self.read();
        state.authorized(dataset, caller, Action::ViewFiles)?;
        Ok(state
            .manifests
            .values()
            .filter(|m| m.dataset_id == dataset)
            .cloned()
            .collect())
    }
}
