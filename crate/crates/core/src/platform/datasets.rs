use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{DatasetRecord, Platform, PlatformState, Txn};
use crate::access::{Action, GrantSet};
use crate::dataset::{
    missing_publication_fields, normalize_tags, validate_dataset_name, ActivityAction, ActivityEntry,
    ActivityLog, AttributePatch, Dataset, DatasetAttributes, DatasetMetrics,
};
use crate::error::{Error, Result};
use crate::graph::MetadataGraph;
use crate::id::Id;
use crate::publishing::PublicationState;
use crate::storage::StorageReport;
use crate::tree::{NodeKind, Tree};

/// Tree mutation addressed by dataset-relative paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TreeOp {
    CreateFolder { parent: String, name: String },
    Rename { target: String, name: String },
    Move { target: String, destination: String },
    SoftDelete { target: String },
    Undelete { target: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEntry {
    pub id: Id,
    pub path: String,
    pub kind: NodeKind,
    pub size: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: Id,
    pub workspace_id: Id,
    pub name: String,
    pub status: String,
    pub owner_id: Id,
}

/// Everything a Viewer may see about a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetView {
    pub id: Id,
    pub workspace_id: Id,
    pub owner_id: Id,
    pub attributes: DatasetAttributes,
    pub status: String,
    pub collections: BTreeSet<String>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub requester_pays: bool,
    pub locked: bool,
    pub publication_state: Option<PublicationState>,
    pub metrics: DatasetMetrics,
    pub tree: Vec<TreeEntry>,
}

pub(crate) fn payer_prefixes(dataset: Id) -> [String; 2] {
    [format!("datasets/{dataset}/"), format!("published/{dataset}/")]
}

pub(crate) fn file_object_key(dataset: Id, node: Id) -> String {
    format!("datasets/{dataset}/files/{node}")
}

pub(crate) fn metrics_of(record: &DatasetRecord) -> DatasetMetrics {
    let files = record.dataset.tree.live_files();
    DatasetMetrics {
        file_count: files.len() as u64,
        total_size_bytes: files.iter().map(|f| f.size).sum(),
        record_count: record.graph.record_count(),
        last_updated: record.dataset.updated_at,
    }
}

pub(crate) fn tree_entries(tree: &Tree) -> Vec<TreeEntry> {
    let mut entries: Vec<TreeEntry> = tree
        .live_ids()
        .into_iter()
        .filter(|id| *id != tree.root())
        .map(|id| {
            let node = tree.node(id).expect("live id");
            TreeEntry {
                id,
                path: tree.path_of(id),
                kind: node.kind,
                size: node.size_bytes,
                checksum: node.checksum.clone(),
            }
        })
        .collect();
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    entries
}

fn view_of(state: &PlatformState, record: &DatasetRecord) -> DatasetView {
    let d = &record.dataset;
    DatasetView {
        id: d.id,
        workspace_id: d.workspace_id,
        owner_id: d.owner_id,
        attributes: d.attributes.clone(),
        status: d.status.clone(),
        collections: d.collections.clone(),
        created_at: d.created_at,
        updated_at: d.updated_at,
        requester_pays: d.requester_pays,
        locked: state.is_locked(record),
        publication_state: record
            .request
            .and_then(|r| state.requests.get(&r))
            .map(|r| r.state),
        metrics: metrics_of(record),
        tree: tree_entries(&d.tree),
    }
}

fn short_id(state: &PlatformState, id: Id) -> String {
    let hex = id.to_hex();
    let taken: BTreeSet<&str> = state.datasets.values().map(|r| r.dataset.short_id.as_str()).collect();
    (8..=hex.len())
        .map(|n| &hex[..n])
        .find(|candidate| !taken.contains(candidate))
        .unwrap_or(&hex)
        .to_string()
}

impl Txn<'_> {
    fn name_taken(&self, workspace: Id, name: &str, except: Option<Id>) -> bool {
        self.state.datasets.values().any(|r| {
            r.dataset.workspace_id == workspace
                && !r.dataset.deleted
                && Some(r.dataset.id) != except
                && r.dataset.attributes.name == name
        })
    }
}

impl Platform {
    pub fn create_dataset(&self, workspace: Id, owner: Id, name: &str) -> Result<Dataset> {
        let name = validate_dataset_name(name)?.to_string();
        self.write(|txn| {
            let ws = txn.state.workspace(workspace)?;
            if !ws.members.contains(&owner) {
                return Err(Error::NotAMember(owner.to_string()));
            }
            if txn.name_taken(workspace, &name, None) {
                return Err(Error::NameConflict(name.clone()));
            }
            let status = ws.default_status.clone();
            let id = txn.new_id();
            let dataset = Dataset {
                id,
                short_id: short_id(txn.state, id),
                workspace_id: workspace,
                owner_id: owner,
                attributes: DatasetAttributes {
                    name: name.clone(),
                    ..Default::default()
                },
                status,
                tree: Tree::new(txn.new_id()),
                created_at: txn.now,
                updated_at: txn.now,
                collections: BTreeSet::new(),
                deleted: false,
                grants: GrantSet::with_owner(owner),
                requester_pays: false,
            };
            txn.state.datasets.insert(
                id,
                DatasetRecord {
                    dataset: dataset.clone(),
                    graph: MetadataGraph::default(),
                    activity: ActivityLog::default(),
                    versions: Vec::new(),
                    request: None,
                    snapshots: Default::default(),
                },
            );
            txn.log(id, owner, ActivityAction::Created, format!("created dataset {name:?}"))?;
            Ok(txn.state.datasets[&id].dataset.clone())
        })
    }

    pub fn dataset(&self, dataset: Id, caller: Id) -> Result<DatasetView> {
        let state = self.read();
        let record = state.authorized(dataset, caller, Action::ViewFiles)?;
        Ok(view_of(&state, record))
    }

    /// Raw dataset record, bypassing authorization. For tests and tooling.
    pub fn dataset_unchecked(&self, dataset: Id) -> Result<Dataset> {
        Ok(self.read().record(dataset)?.dataset.clone())
    }

    /// Datasets the caller can at least view.
    pub fn list_datasets(&self, caller: Id) -> Vec<DatasetSummary> {
        let state = self.read();
        state
            .datasets
            .values()
            .filter(|r| !r.dataset.deleted && state.role_of(caller, &r.dataset).is_some())
            .map(|r| DatasetSummary {
                id: r.dataset.id,
                workspace_id: r.dataset.workspace_id,
                name: r.dataset.attributes.name.clone(),
                status: r.dataset.status.clone(),
                owner_id: r.dataset.owner_id,
            })
            .collect()
    }

    pub fn update_attributes(&self, dataset: Id, caller: Id, patch: &AttributePatch) -> Result<DatasetAttributes> {
        let touched = patch.touched();
        if touched.is_empty() {
            return Err(Error::InvalidArgument("empty attribute patch".into()));
        }
        self.write(|txn| {
            let record = txn.state.authorized(dataset, caller, Action::EditAttributes)?;
            let workspace = record.dataset.workspace_id;
            let mut attrs = record.dataset.attributes.clone();
            if let Some(name) = &patch.name {
                let name = validate_dataset_name(name)?;
                if txn.name_taken(workspace, name, Some(dataset)) {
                    return Err(Error::NameConflict(name.to_string()));
                }
                attrs.name = name.to_string();
            }
            let text = |v: &Option<String>| v.as_ref().map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
            if patch.subtitle.is_some() {
                attrs.subtitle = text(&patch.subtitle);
            }
            if patch.description.is_some() {
                attrs.description = text(&patch.description);
            }
            if patch.license.is_some() {
                attrs.license = text(&patch.license);
            }
            if patch.banner.is_some() {
                attrs.banner = text(&patch.banner);
            }
            if let Some(tags) = &patch.tags {
                attrs.tags = normalize_tags(tags);
            }
            if let Some(contributors) = &patch.contributors {
                if contributors.iter().any(|c| c.name.trim().is_empty()) {
                    return Err(Error::InvalidArgument("contributor name must not be empty".into()));
                }
                attrs.contributors = contributors.clone();
            }
            txn.state.record_mut(dataset)?.dataset.attributes = attrs.clone();
            txn.log(dataset, caller, ActivityAction::AttributeChanged, format!("changed {}", touched.join(", ")))?;
            Ok(attrs)
        })
    }

    pub fn set_status(&self, dataset: Id, caller: Id, label: &str) -> Result<()> {
        self.write(|txn| {
            let record = txn.state.authorized(dataset, caller, Action::ChangeStatus)?;
            let ws = txn.state.workspace(record.dataset.workspace_id)?;
            if !ws.statuses.contains(label) {
                return Err(Error::InvalidArgument(format!("status {label:?} is not configured")));
            }
            let previous = std::mem::replace(&mut txn.state.record_mut(dataset)?.dataset.status, label.to_string());
            txn.log(dataset, caller, ActivityAction::AttributeChanged, format!("status {previous} -> {label}"))?;
            Ok(())
        })
    }

    pub fn set_collections(&self, dataset: Id, caller: Id, collections: &[String]) -> Result<()> {
        self.write(|txn| {
            txn.state.authorized(dataset, caller, Action::EditAttributes)?;
            let names: BTreeSet<String> =
                collections.iter().map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect();
            let detail = format!("collections {:?}", names);
            txn.state.record_mut(dataset)?.dataset.collections = names;
            txn.log(dataset, caller, ActivityAction::AttributeChanged, detail)?;
            Ok(())
        })
    }

    pub fn set_requester_pays(&self, dataset: Id, caller: Id, enabled: bool) -> Result<()> {
        self.write(|txn| {
            txn.state.authorized(dataset, caller, Action::EditAttributes)?;
            txn.state.record_mut(dataset)?.dataset.requester_pays = enabled;
            for prefix in payer_prefixes(dataset) {
                txn.store.set_requester_pays(&prefix, enabled);
            }
            txn.log(dataset, caller, ActivityAction::AttributeChanged, format!("requester_pays = {enabled}"))?;
            Ok(())
        })
    }

    /// Marks the dataset deleted. Its id is never reused.
    pub fn delete_dataset(&self, dataset: Id, caller: Id) -> Result<()> {
        self.write(|txn| {
            let record = txn.state.authorized(dataset, caller, Action::DeleteDataset)?;
            if txn.state.is_locked(record) {
                return Err(Error::DatasetLocked);
            }
            txn.log(dataset, caller, ActivityAction::Deleted, "dataset deleted")?;
            txn.state.record_mut(dataset)?.dataset.deleted = true;
            Ok(())
        })
    }

    pub fn mutate_tree(&self, dataset: Id, caller: Id, op: &TreeOp) -> Result<Vec<TreeEntry>> {
        self.write(|txn| {
            txn.state.authorized(dataset, caller, Action::EditTree)?;
            txn.state.ensure_unlocked(dataset)?;
            let now = txn.now;
            let window = txn.store.policy().undelete_window_days;
            let new_id = txn.new_id();
            let record = txn.state.record_mut(dataset)?;
            let tree = &mut record.dataset.tree;
            let (action, detail) = match op {
                TreeOp::CreateFolder { parent, name } => {
                    let parent_id = tree.resolve(parent, false)?;
                    tree.create_folder(parent_id, name, new_id)?;
                    (ActivityAction::Created, format!("created folder {}", tree.path_of(new_id)))
                }
                TreeOp::Rename { target, name } => {
                    let id = tree.resolve(target, false)?;
                    tree.rename(id, name)?;
                    (ActivityAction::Renamed, format!("renamed {target} to {}", tree.path_of(id)))
                }
                TreeOp::Move { target, destination } => {
                    let id = tree.resolve(target, false)?;
                    let dest = tree.resolve(destination, false)?;
                    tree.move_node(id, dest)?;
                    (ActivityAction::Moved, format!("moved {target} to {}", tree.path_of(id)))
                }
                TreeOp::SoftDelete { target } => {
                    let id = tree.resolve(target, false)?;
                    let affected = tree.soft_delete(id, now)?;
                    let keys: Vec<String> = affected
                        .iter()
                        .filter_map(|n| tree.node(*n).and_then(|n| n.object_key.clone()))
                        .collect();
                    let files: BTreeSet<Id> = affected
                        .iter()
                        .copied()
                        .filter(|n| tree.node(*n).is_some_and(|n| n.kind == NodeKind::File))
                        .collect();
                    let detached = record.graph.detach_files(&files);
                    for key in keys {
                        // a missing object means it was never promoted; nothing to mark
                        match txn.store.delete(&key) {
                            Ok(()) | Err(Error::NotFound(_)) => {}
                            Err(e) => return Err(e),
                        }
                    }
                    let mut detail = format!("deleted {target} ({} nodes)", affected.len());
                    if !detached.is_empty() {
                        detail.push_str(&format!("; detached file links from {} records", detached.len()));
                    }
                    (ActivityAction::Deleted, detail)
                }
                TreeOp::Undelete { target } => {
                    let id = tree.resolve(target, true)?;
                    let restored = tree.undelete(id, now, window)?;
                    for node in &restored {
                        if let Some(key) = tree.node(*node).and_then(|n| n.object_key.clone()) {
                            match txn.store.undelete(&key, now) {
                                Ok(_) | Err(Error::NotDeleted(_)) | Err(Error::NotFound(_)) => {}
                                Err(e) => return Err(e),
                            }
                        }
                    }
                    (ActivityAction::Undeleted, format!("restored {target} ({} nodes)", restored.len()))
                }
            };
            txn.log(dataset, caller, action, detail)?;
            Ok(tree_entries(&txn.state.record(dataset)?.dataset.tree))
        })
    }

    pub fn list_tree(&self, dataset: Id, caller: Id) -> Result<Vec<TreeEntry>> {
        let state = self.read();
        Ok(tree_entries(&state.authorized(dataset, caller, Action::ViewFiles)?.dataset.tree))
    }

    /// Bytes of a live file.
    pub fn read_file(&self, dataset: Id, caller: Id, path: &str, payer: Option<&str>) -> Result<Vec<u8>> {
        let key = {
            let state = self.read();
            let record = state.authorized(dataset, caller, Action::Download)?;
            let tree = &record.dataset.tree;
            let node = tree.node(tree.resolve(path, false)?).expect("resolved");
            node.object_key
                .clone()
                .ok_or_else(|| Error::InvalidArgument(format!("{path:?} is a folder")))?
        };
        self.store.get(&key, payer)
    }

    pub fn dataset_metrics(&self, dataset: Id, caller: Id) -> Result<DatasetMetrics> {
        let state = self.read();
        Ok(metrics_of(state.authorized(dataset, caller, Action::ViewFiles)?))
    }

    pub fn validate_publication_fields(&self, dataset: Id) -> Result<Vec<String>> {
        Ok(missing_publication_fields(&self.read().record(dataset)?.dataset.attributes))
    }

    pub fn query_activity(&self, dataset: Id, caller: Id, from_seq: u64, limit: usize) -> Result<Vec<ActivityEntry>> {
        let state = self.read();
        Ok(state
            .authorized(dataset, caller, Action::ViewFiles)?
            .activity
            .page(from_seq, limit))
    }

    pub fn storage_report(&self, dataset: Id, caller: Id) -> Result<StorageReport> {
        let prefixes = {
            let state = self.read();
            state.authorized(dataset, caller, Action::ViewFiles)?;
            let mut prefixes: Vec<String> = payer_prefixes(dataset).into();
            prefixes.extend(
                state
                    .manifests
                    .values()
                    .filter(|m| m.dataset_id == dataset)
                    .map(|m| m.staging_prefix()),
            );
            prefixes
        };
        Ok(self.store.storage_report(&prefixes))
    }
}
