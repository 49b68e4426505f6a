use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::metadata::serialize_record_graph;
use super::{DatasetRecord, Platform, PlatformState, Txn};
use crate::access::Action;
use crate::dataset::ActivityAction;
use crate::error::{Error, Result};
use crate::events::EventKind;
use crate::id::Id;
use crate::publishing::{
    build_snapshot, check_submission, snapshot_order, snapshot_prefix, DatasetVersion, Doi, DoiRecord, PublicationEvent,
    PublicationRequest, PublicationState, ReviewDecision, SnapshotInput, SnapshotManifest, MAX_EMBARGO_DAYS,
};
use crate::storage::{Tier, Transition};

/// Copy of what a snapshot says about itself, kept for catalog pages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedSnapshot {
    pub manifest: SnapshotManifest,
    pub readme: String,
    pub metadata_keys: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicCatalogEntry {
    pub dataset_id: Id,
    /// Publication state of the dataset's current request.
    pub status: PublicationState,
    pub latest: DatasetVersion,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub transitions: Vec<Transition>,
    pub released: Vec<DatasetVersion>,
}

/// Payer token the platform uses for its own reads.
const PLATFORM_PAYER: &str = "platform";

const README_NAMES: [&str; 2] = ["readme.md", "README.md"];
const CHANGELOG_NAMES: [&str; 2] = ["changelog.md", "CHANGELOG.md"];

fn request_ref(state: &PlatformState, id: Id) -> Result<&PublicationRequest> {
    state
        .requests
        .get(&id)
        .ok_or_else(|| Error::NotFound(format!("publication request {id}")))
}

fn visible(state: &PlatformState, record: &DatasetRecord, version: &DatasetVersion, caller: Option<Id>) -> bool {
    version.public
        || caller
            .and_then(|u| state.role_of(u, &record.dataset))
            .is_some_and(|r| r >= Action::Download.required_role())
}

impl Txn<'_> {
    fn request_mut(&mut self, id: Id) -> Result<&mut PublicationRequest> {
        self.state
            .requests
            .get_mut(&id)
            .ok_or_else(|| Error::NotFound(format!("publication request {id}")))
    }

    /// Reviewer must be on the publishing team and not the submitter.
    fn check_reviewer(&self, request: Id, reviewer: Id) -> Result<Id> {
        let req = request_ref(self.state, request)?;
        let ws = self.state.record(req.dataset_id)?.dataset.workspace_id;
        if !self.state.on_publishing_team(ws, reviewer) {
            return Err(Error::NotOnPublishingTeam);
        }
        if req.submitted_by == reviewer {
            return Err(Error::SelfReview);
        }
        Ok(req.dataset_id)
    }

    fn advance(&mut self, request: Id, event: PublicationEvent, user: Id, detail: String) -> Result<PublicationRequest> {
        let now = self.now;
        let req = self.request_mut(request)?;
        let from = req.state;
        let to = req.apply(event, now)?;
        let dataset = req.dataset_id;
        self.log(dataset, user, ActivityAction::PublishEvent, format!("{event}: {from} -> {to}{detail}"))?;
        Ok(self.state.requests[&request].clone())
    }

    fn release(&mut self, now: DateTime<Utc>) -> Vec<DatasetVersion> {
        let mut released = Vec::new();
        for record in self.state.datasets.values_mut() {
            for v in record.versions.iter_mut() {
                if !v.public && v.embargo_until.is_some_and(|until| until <= now) {
                    v.public = true;
                    released.push(v.clone());
                }
            }
        }
        released
    }
}

impl Platform {
    /// Owner asks the publishing team to review the dataset.
    pub fn submit_for_review(&self, dataset: Id, caller: Id, justification: Option<&str>) -> Result<PublicationRequest> {
        let justification = justification.map(str::trim).filter(|j| !j.is_empty()).map(String::from);
        self.write(|txn| {
            let record = txn.state.authorized(dataset, caller, Action::SubmitPublication)?;
            check_submission(
                &record.dataset.attributes,
                &record.dataset.tree.live_files(),
                justification.as_deref(),
                self.free_publication_bytes,
            )?;
            let current = record.request.and_then(|r| txn.state.requests.get(&r)).cloned();
            let (id, event) = match current {
                Some(req) if req.state == PublicationState::Rejected => (req.id, PublicationEvent::Resubmit),
                Some(req) if req.state != PublicationState::Published => (req.id, PublicationEvent::Submit),
                _ => {
                    let id = txn.new_id();
                    txn.state.requests.insert(
                        id,
                        PublicationRequest {
                            id,
                            dataset_id: dataset,
                            state: PublicationState::Draft,
                            reviewer_note: None,
                            submitted_by: caller,
                            decided_by: None,
                            justification: None,
                            created_at: txn.now,
                            updated_at: txn.now,
                            version: None,
                        },
                    );
                    txn.state.record_mut(dataset)?.request = Some(id);
                    (id, PublicationEvent::Submit)
                }
            };
            let now = txn.now;
            let req = txn.request_mut(id)?;
            let before = req.clone();
            req.apply(event, now)?;
            req.submitted_by = caller;
            req.decided_by = None;
            req.justification = justification.clone();
            let after = req.clone();
            txn.log(
                dataset,
                caller,
                ActivityAction::PublishEvent,
                format!("{event}: {} -> {}", before.state, after.state),
            )?;
            Ok(after)
        })
    }

    pub fn withdraw(&self, request: Id, caller: Id) -> Result<PublicationRequest> {
        self.write(|txn| {
            let dataset = request_ref(txn.state, request)?.dataset_id;
            txn.state.authorized(dataset, caller, Action::SubmitPublication)?;
            txn.advance(request, PublicationEvent::Withdraw, caller, String::new())
        })
    }

    /// A publishing-team member takes the request into review.
    pub fn claim(&self, request: Id, reviewer: Id) -> Result<PublicationRequest> {
        self.write(|txn| {
            txn.check_reviewer(request, reviewer)?;
            txn.advance(request, PublicationEvent::Claim, reviewer, String::new())
        })
    }

    /// Accept or reject. An unclaimed request is claimed by the reviewer first.
    pub fn review(
        &self,
        request: Id,
        reviewer: Id,
        decision: ReviewDecision,
        note: Option<&str>,
    ) -> Result<PublicationRequest> {
        self.write(|txn| {
            let dataset = txn.check_reviewer(request, reviewer)?;
            let now = txn.now;
            let req = txn.request_mut(request)?;
            let from = req.state;
            let event = match decision {
                ReviewDecision::Accept => PublicationEvent::Accept,
                ReviewDecision::Reject => PublicationEvent::Reject,
            };
            let mut next = req.clone();
            if next.state == PublicationState::Requested {
                next.apply(PublicationEvent::Claim, now)?;
            }
            next.apply(event, now)?;
            next.decided_by = Some(reviewer);
            next.reviewer_note = note.map(str::trim).filter(|n| !n.is_empty()).map(String::from);
            *req = next.clone();
            txn.log(
                dataset,
                reviewer,
                ActivityAction::PublishEvent,
                format!("{event}: {from} -> {}", next.state),
            )?;
            txn.emit(
                EventKind::PublicationDecided,
                dataset,
                serde_json::json!({
                    "request_id": request,
                    "decision": decision,
                    "state": next.state,
                    "note": next.reviewer_note,
                }),
            );
            Ok(next)
        })
    }

    /// Export an immutable snapshot of an accepted dataset and mint its DOI.
    pub fn publish(&self, request: Id, publisher: Id, embargo_days: u32) -> Result<DatasetVersion> {
        if embargo_days > MAX_EMBARGO_DAYS {
            return Err(Error::EmbargoTooLong(embargo_days));
        }
        self.write(|txn| {
            let req = request_ref(txn.state, request)?;
            let dataset = req.dataset_id;
            let record = txn.state.record(dataset)?;
            if !txn.state.on_publishing_team(record.dataset.workspace_id, publisher) {
                return Err(Error::NotOnPublishingTeam);
            }
            crate::publishing::transition(req.state, PublicationEvent::Publish)?;

            let version = record.versions.iter().map(|v| v.version).max().unwrap_or(0) + 1;
            let doi = self.doi.mint(&record.dataset.short_id, version).to_string();
            if txn.state.dois.contains_key(&doi) {
                return Err(Error::NameConflict(doi));
            }
            let now = txn.now;
            let embargo_until = (embargo_days > 0).then(|| now + Duration::days(i64::from(embargo_days)));

            let tree = &record.dataset.tree;
            let mut files = Vec::new();
            let mut readme = None;
            let mut changelog = None;
            for f in tree.live_files() {
                let key = f.object_key.clone().expect("files carry object keys");
                let bytes = txn.store.get(&key, Some(PLATFORM_PAYER))?;
                if README_NAMES.contains(&f.path.as_str()) && readme.is_none() {
                    readme = Some(bytes.clone());
                }
                if CHANGELOG_NAMES.contains(&f.path.as_str()) && changelog.is_none() {
                    changelog = Some(bytes.clone());
                }
                files.push((f.path, bytes));
            }
            let metadata = serialize_record_graph(record);
            let metadata_keys: Vec<String> = metadata.keys().cloned().collect();
            let (manifest, objects) = build_snapshot(SnapshotInput {
                dataset_id: dataset,
                attributes: &record.dataset.attributes,
                version,
                doi: &doi,
                created_at: now,
                embargo_until,
                files,
                metadata,
                record_count: record.graph.record_count(),
                readme,
                changelog,
            });
            let prefix = snapshot_prefix(dataset, version);
            for (rel, bytes) in &objects {
                txn.store.put(&format!("{prefix}{rel}"), bytes)?;
            }
            let published = DatasetVersion {
                dataset_id: dataset,
                version,
                doi: doi.clone(),
                created_at: now,
                embargo_until,
                snapshot_prefix: prefix,
                file_count: manifest.metrics.files,
                total_size_bytes: manifest.metrics.size_bytes,
                record_count: manifest.metrics.records,
                public: embargo_until.is_none(),
                summary: (&record.dataset.attributes).into(),
            };
            let snapshot = PublishedSnapshot {
                readme: String::from_utf8_lossy(&objects["readme.md"]).into_owned(),
                manifest,
                metadata_keys,
            };
            txn.state.dois.insert(
                doi.clone(),
                DoiRecord {
                    doi: doi.clone(),
                    dataset_id: dataset,
                    version,
                    target: published.manifest_key(),
                },
            );
            let rec = txn.state.record_mut(dataset)?;
            rec.versions.push(published.clone());
            rec.snapshots.insert(version, snapshot);
            txn.request_mut(request)?.version = Some(version);
            txn.advance(request, PublicationEvent::Publish, publisher, format!(" (version {version}, {doi})"))?;
            txn.emit(
                EventKind::VersionPublished,
                dataset,
                serde_json::json!({
                    "version": version,
                    "doi": doi,
                    "public": published.public,
                    "embargo_until": embargo_until,
                }),
            );
            Ok(published)
        })
    }

    /// Make every version whose embargo has passed public. Idempotent.
    pub fn release_embargo(&self, now: DateTime<Utc>) -> Result<Vec<DatasetVersion>> {
        self.write(|txn| Ok(txn.release(now)))
    }

    /// Manifest key a DOI points at.
    pub fn resolve_doi(&self, doi: &str) -> Result<String> {
        let parsed = Doi::parse(doi)?;
        self.read()
            .dois
            .get(&parsed.to_string())
            .map(|r| r.target.clone())
            .ok_or_else(|| Error::UnknownDoi(doi.to_string()))
    }

    pub fn doi_record(&self, doi: &str) -> Result<DoiRecord> {
        let parsed = Doi::parse(doi)?;
        self.read()
            .dois
            .get(&parsed.to_string())
            .cloned()
            .ok_or_else(|| Error::UnknownDoi(doi.to_string()))
    }

    pub fn publication_request(&self, request: Id, caller: Id) -> Result<PublicationRequest> {
        let state = self.read();
        let req = request_ref(&state, request)?;
        let ws = state.record(req.dataset_id)?.dataset.workspace_id;
        if !state.on_publishing_team(ws, caller) {
            state.authorized(req.dataset_id, caller, Action::ViewFiles)?;
        }
        Ok(req.clone())
    }

    /// Requests awaiting a decision in workspaces where `reviewer` publishes.
    pub fn review_queue(&self, reviewer: Id) -> Vec<PublicationRequest> {
        let state = self.read();
        state
            .requests
            .values()
            .filter(|r| matches!(r.state, PublicationState::Requested | PublicationState::InReview))
            .filter(|r| {
                state
                    .record(r.dataset_id)
                    .is_ok_and(|d| state.on_publishing_team(d.dataset.workspace_id, reviewer))
            })
            .cloned()
            .collect()
    }

    /// Versions the caller may see: public ones, or all with Viewer+.
    pub fn versions(&self, dataset: Id, caller: Option<Id>) -> Result<Vec<DatasetVersion>> {
        let state = self.read();
        let record = state.record(dataset)?;
        Ok(record
            .versions
            .iter()
            .filter(|v| visible(&state, record, v, caller))
            .cloned()
            .collect())
    }

    /// One version and its snapshot description, if visible to the caller.
    /// Invisible versions read as Forbidden for anonymous callers too.
    pub fn version(&self, dataset: Id, version: u32, caller: Option<Id>) -> Result<(DatasetVersion, PublishedSnapshot)> {
        let state = self.read();
        let record = state.record(dataset)?;
        let v = record
            .versions
            .iter()
            .find(|v| v.version == version)
            .ok_or(Error::UnknownVersion(version))?;
        if !visible(&state, record, v, caller) {
            return Err(Error::Forbidden);
        }
        Ok((v.clone(), record.snapshots[&version].clone()))
    }

    /// Snapshot keys in archive order.
    pub fn snapshot_keys(&self, dataset: Id, version: u32, caller: Option<Id>) -> Result<Vec<String>> {
        let (v, snap) = self.version(dataset, version, caller)?;
        Ok(snapshot_order(&snap.manifest, snap.metadata_keys.iter().cloned())
            .into_iter()
            .map(|rel| format!("{}{rel}", v.snapshot_prefix))
            .collect())
    }

    /// Read one object under `published/`, subject to version visibility.
    pub fn snapshot_object(&self, key: &str, caller: Option<Id>, payer: Option<&str>) -> Result<Vec<u8>> {
        let mut parts = key.strip_prefix("published/").unwrap_or("").splitn(3, '/');
        let (Some(ds), Some(v), Some(rest)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::NotFound(format!("object {key:?}")));
        };
        let dataset: Id = ds.parse().map_err(|_| Error::NotFound(format!("object {key:?}")))?;
        let version: u32 = v.parse().map_err(|_| Error::NotFound(format!("object {key:?}")))?;
        if rest.is_empty() || rest.contains("..") {
            return Err(Error::NotFound(format!("object {key:?}")));
        }
        self.version(dataset, version, caller)?;
        self.store.get(key, payer)
    }

    /// Every object of a version, relative key → bytes. Archived objects get a
    /// restore request and the call fails with PendingRestore.
    pub fn rehydrate(
        &self,
        dataset: Id,
        version: u32,
        caller: Option<Id>,
        payer: Option<&str>,
    ) -> Result<BTreeMap<String, Vec<u8>>> {
        let keys = self.snapshot_keys(dataset, version, caller)?;
        let prefix = snapshot_prefix(dataset, version);
        let now = self.now();
        let mut pending = 0usize;
        for key in &keys {
            match self.store.check_readable(key, payer) {
                Ok(()) => {}
                Err(Error::TierNotReadable(_)) => {
                    self.store.request_restore(key, now, payer)?;
                    pending += 1;
                }
                Err(e) => return Err(e),
            }
        }
        if pending > 0 {
            return Err(Error::PendingRestore { pending });
        }
        keys.iter()
            .map(|key| {
                let bytes = self.store.get(key, payer)?;
                Ok((key[prefix.len()..].to_string(), bytes))
            })
            .collect()
    }

    /// Rehydrate `files/` and `metadata/` of a version into `destination`.
    pub fn rehydrate_to(
        &self,
        dataset: Id,
        version: u32,
        caller: Option<Id>,
        payer: Option<&str>,
        destination: &Path,
    ) -> Result<Vec<String>> {
        let objects = self.rehydrate(dataset, version, caller, payer)?;
        let mut written = Vec::new();
        for (rel, bytes) in objects {
            if !(rel.starts_with("files/") || rel.starts_with("metadata/")) {
                continue;
            }
            let path = destination.join(&rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, bytes)?;
            written.push(rel);
        }
        Ok(written)
    }

    /// Latest public version of every dataset matching the query, newest
    /// publication first with id as tiebreak.
    pub fn catalog(&self, text: Option<&str>, tags: &[String], status: Option<PublicationState>) -> Vec<PublicCatalogEntry> {
        let state = self.read();
        let text = text.map(|t| t.trim().to_lowercase()).filter(|t| !t.is_empty());
        let tags: Vec<String> = tags.iter().map(|t| t.trim().to_lowercase()).filter(|t| !t.is_empty()).collect();
        let mut out: Vec<PublicCatalogEntry> = state
            .datasets
            .values()
            .filter(|r| !r.dataset.deleted)
            .filter_map(|r| {
                let latest = r.versions.iter().filter(|v| v.public).max_by_key(|v| v.version)?;
                let current = r
                    .request
                    .and_then(|id| state.requests.get(&id))
                    .map_or(PublicationState::Published, |req| req.state);
                Some(PublicCatalogEntry {
                    dataset_id: r.dataset.id,
                    status: current,
                    latest: latest.clone(),
                })
            })
            .filter(|e| {
                let s = &e.latest.summary;
                let text_ok = text.as_ref().is_none_or(|t| {
                    s.name.to_lowercase().contains(t)
                        || s.description.as_deref().is_some_and(|d| d.to_lowercase().contains(t))
                });
                text_ok && tags.iter().all(|t| s.tags.contains(t)) && status.is_none_or(|st| e.status == st)
            })
            .collect();
        out.sort_by(|a, b| {
            b.latest
                .created_at
                .cmp(&a.latest.created_at)
                .then(a.dataset_id.cmp(&b.dataset_id))
        });
        out
    }

    pub fn request_restore(&self, key: &str, payer: Option<&str>) -> Result<crate::storage::RestoreState> {
        self.store.request_restore(key, self.now(), payer)
    }

    /// Embargo release plus one lifecycle pass. Staging objects of open
    /// manifests are left alone.
    pub fn sweep(&self, now: DateTime<Utc>) -> Result<SweepReport> {
        let released = self.write(|txn| Ok(txn.release(now)))?;
        let open_prefixes: Vec<String> = self
            .read()
            .manifests
            .values()
            .filter(|m| m.state == crate::upload::ManifestState::Open)
            .map(|m| m.staging_prefix())
            .collect();
        let exempt = |key: &str| open_prefixes.iter().any(|p| key.starts_with(p.as_str()));
        let transitions = self.store.apply_lifecycle(now, &exempt)?;
        Ok(SweepReport { transitions, released })
    }

    /// Tier of every object under a version's snapshot prefix.
    pub fn snapshot_tiers(&self, dataset: Id, version: u32) -> BTreeMap<String, Tier> {
        self.store
            .list(&snapshot_prefix(dataset, version))
            .into_iter()
            .map(|o| (o.key, o.tier))
            .collect()
    }
}
