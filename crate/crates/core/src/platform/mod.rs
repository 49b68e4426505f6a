//! The platform: every module behind one handle with authorization,
//! per-call serialization and persistence.
//!
//! Mutations take the state write lock for their whole duration and are
//! persisted before the lock is released; reads share the lock. Events are
//! handed to sinks after the lock is dropped.

mod access;
mod datasets;
mod metadata;
mod publishing;
mod uploads;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use datasets::{DatasetSummary, DatasetView, TreeEntry, TreeOp};
pub use metadata::{FileRef, GraphDump, LinkOutcome, LinkSpec};
pub use publishing::{PublicCatalogEntry, PublishedSnapshot, SweepReport};
pub use uploads::FinalizeOutcome;

use crate::access::{effective_role, Action, Membership, Role};
use crate::clock::Clock;
use crate::dataset::{ActivityAction, ActivityLog, Dataset, Team, User, Workspace, DEFAULT_STATUS};
use crate::error::{Error, Result};
use crate::events::{Event, EventKind, EventSink};
use crate::graph::MetadataGraph;
use crate::id::{Id, IdGenerator};
use crate::persist::{MemoryState, StateBackend};
use crate::publishing::{
    DatasetVersion, DoiMinter, DoiRecord, MockDoiMinter, PublicationRequest, FREE_PUBLICATION_BYTES,
};
use crate::storage::ObjectStore;
use crate::upload::UploadManifest;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct DatasetRecord {
    pub dataset: Dataset,
    pub graph: MetadataGraph,
    pub activity: ActivityLog,
    pub versions: Vec<DatasetVersion>,
    /// Current publication request, if any.
    pub request: Option<Id>,
    #[serde(default)]
    pub snapshots: BTreeMap<u32, PublishedSnapshot>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub(crate) struct PlatformState {
    pub users: BTreeMap<Id, User>,
    pub workspaces: BTreeMap<Id, Workspace>,
    pub teams: BTreeMap<Id, Team>,
    pub datasets: BTreeMap<Id, DatasetRecord>,
    pub manifests: BTreeMap<Id, UploadManifest>,
    pub requests: BTreeMap<Id, PublicationRequest>,
    pub dois: BTreeMap<String, DoiRecord>,
}

impl PlatformState {
    pub fn workspace(&self, id: Id) -> Result<&Workspace> {
        self.workspaces
            .get(&id)
            .ok_or_else(|| Error::NotFound(format!("workspace {id}")))
    }

    pub fn record(&self, id: Id) -> Result<&DatasetRecord> {
        self.datasets
            .get(&id)
            .filter(|r| !r.dataset.deleted)
            .ok_or_else(|| Error::NotFound(format!("dataset {id}")))
    }

    pub fn record_mut(&mut self, id: Id) -> Result<&mut DatasetRecord> {
        self.datasets
            .get_mut(&id)
            .filter(|r| !r.dataset.deleted)
            .ok_or_else(|| Error::NotFound(format!("dataset {id}")))
    }

    pub fn role_of(&self, user: Id, dataset: &Dataset) -> Option<Role> {
        let ws = self.workspaces.get(&dataset.workspace_id)?;
        let teams: Vec<Id> = ws
            .teams
            .iter()
            .filter(|t| self.teams.get(t).is_some_and(|t| t.members.contains(&user)))
            .copied()
            .collect();
        let granted = effective_role(
            &dataset.grants,
            Membership {
                user,
                workspace: ws.id,
                in_workspace: ws.members.contains(&user),
                teams: &teams,
            },
        );
        if dataset.owner_id == user {
            Some(Role::Owner)
        } else {
            granted
        }
    }

    /// Dataset if `user` may perform `action` on it.
    pub fn authorized(&self, dataset: Id, user: Id, action: Action) -> Result<&DatasetRecord> {
        let record = self.record(dataset)?;
        match self.role_of(user, &record.dataset) {
            Some(role) if role >= action.required_role() => Ok(record),
            _ => Err(Error::Forbidden),
        }
    }

    pub fn is_locked(&self, record: &DatasetRecord) -> bool {
        record
            .request
            .and_then(|r| self.requests.get(&r))
            .is_some_and(|r| r.state.locks_dataset())
    }

    pub fn ensure_unlocked(&self, dataset: Id) -> Result<()> {
        if self.is_locked(self.record(dataset)?) {
            return Err(Error::DatasetLocked);
        }
        Ok(())
    }

    pub fn on_publishing_team(&self, workspace: Id, user: Id) -> bool {
        self.workspaces
            .get(&workspace)
            .and_then(|ws| self.teams.get(&ws.publishing_team))
            .is_some_and(|t| t.members.contains(&user))
    }
}

/// A mutation in progress: the locked state plus what it needs.
pub(crate) struct Txn<'a> {
    pub state: &'a mut PlatformState,
    pub store: &'a ObjectStore,
    pub now: DateTime<Utc>,
    ids: &'a Mutex<IdGenerator>,
    events: Vec<Event>,
}

impl Txn<'_> {
    pub fn new_id(&self) -> Id {
        self.ids.lock().expect("id generator poisoned").next_id()
    }

    pub fn emit(&mut self, kind: EventKind, dataset: Id, payload: serde_json::Value) {
        let workspace_id = self
            .state
            .datasets
            .get(&dataset)
            .map(|r| r.dataset.workspace_id)
            .unwrap_or(dataset);
        self.events.push(Event {
            kind,
            workspace_id,
            dataset_id: dataset,
            payload,
            timestamp: self.now,
        });
    }

    /// Append an activity entry, bump `updated_at` and announce the change.
    pub fn log(&mut self, dataset: Id, user: Id, action: ActivityAction, detail: impl Into<String>) -> Result<u64> {
        let now = self.now;
        let detail = detail.into();
        let record = self.state.record_mut(dataset)?;
        let seq = record.activity.append(now, user, action, detail.clone());
        record.dataset.updated_at = now.max(record.dataset.created_at);
        self.emit(
            EventKind::DatasetUpdated,
            dataset,
            serde_json::json!({ "seq": seq, "action": action, "detail": detail, "user_id": user }),
        );
        Ok(seq)
    }
}

pub struct PlatformBuilder {
    clock: Arc<dyn Clock>,
    store: Option<ObjectStore>,
    state: Box<dyn StateBackend>,
    doi: Box<dyn DoiMinter>,
    ids: IdGenerator,
    free_publication_bytes: u64,
}

impl PlatformBuilder {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        PlatformBuilder {
            clock,
            store: None,
            state: Box::new(MemoryState::new()),
            doi: Box::new(MockDoiMinter::default()),
            ids: IdGenerator::from_entropy(),
            free_publication_bytes: FREE_PUBLICATION_BYTES,
        }
    }

    pub fn store(mut self, store: ObjectStore) -> Self {
        self.store = Some(store);
        self
    }

    pub fn state_backend(mut self, backend: Box<dyn StateBackend>) -> Self {
        self.state = backend;
        self
    }

    pub fn doi_minter(mut self, minter: Box<dyn DoiMinter>) -> Self {
        self.doi = minter;
        self
    }

    pub fn id_seed(mut self, seed: u64) -> Self {
        self.ids = IdGenerator::seeded(seed);
        self
    }

    /// Dataset size above which submission needs a justification.
    pub fn free_publication_bytes(mut self, bytes: u64) -> Self {
        self.free_publication_bytes = bytes;
        self
    }

    pub fn build(self) -> Result<Platform> {
        let store = match self.store {
            Some(store) => store,
            None => ObjectStore::in_memory(self.clock.clone()),
        };
        let state: PlatformState = match self.state.load()? {
            Some(bytes) => serde_json::from_slice(&bytes)?,
            None => PlatformState::default(),
        };
        for record in state.datasets.values() {
            if record.dataset.requester_pays {
                for prefix in datasets::payer_prefixes(record.dataset.id) {
                    store.set_requester_pays(&prefix, true);
                }
            }
        }
        Ok(Platform {
            state: RwLock::new(state),
            store,
            clock: self.clock,
            persistence: self.state,
            doi: self.doi,
            ids: Mutex::new(self.ids),
            free_publication_bytes: self.free_publication_bytes,
            sinks: RwLock::new(Vec::new()),
        })
    }
}

pub struct Platform {
    state: RwLock<PlatformState>,
    store: ObjectStore,
    clock: Arc<dyn Clock>,
    persistence: Box<dyn StateBackend>,
    doi: Box<dyn DoiMinter>,
    ids: Mutex<IdGenerator>,
    free_publication_bytes: u64,
    sinks: RwLock<Vec<Arc<dyn EventSink>>>,
}

impl std::fmt::Debug for Platform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Platform").field("store", &self.store).finish_non_exhaustive()
    }
}

impl Platform {
    /// Everything in memory, with the given clock.
    pub fn in_memory(clock: Arc<dyn Clock>) -> Platform {
        PlatformBuilder::new(clock).build().expect("empty in-memory platform")
    }

    pub fn builder(clock: Arc<dyn Clock>) -> PlatformBuilder {
        PlatformBuilder::new(clock)
    }

    pub fn store(&self) -> &ObjectStore {
        &self.store
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn subscribe(&self, sink: Arc<dyn EventSink>) {
        self.sinks.write().expect("sinks poisoned").push(sink);
    }

    pub(crate) fn read(&self) -> RwLockReadGuard<'_, PlatformState> {
        self.state.read().expect("platform state poisoned")
    }

    pub(crate) fn write<T>(&self, f: impl FnOnce(&mut Txn<'_>) -> Result<T>) -> Result<T> {
        let now = self.clock.now();
        let mut guard = self.state.write().expect("platform state poisoned");
        let mut txn = Txn {
            state: &mut guard,
            store: &self.store,
            now,
            ids: &self.ids,
            events: Vec::new(),
        };
        let out = f(&mut txn)?;
        let events = std::mem::take(&mut txn.events);
        let bytes = serde_json::to_vec(&*guard)?;
        self.persistence.save(&bytes)?;
        drop(guard);
        let sinks = self.sinks.read().expect("sinks poisoned").clone();
        for event in &events {
            for sink in &sinks {
                sink.publish(event);
            }
        }
        Ok(out)
    }

    // --- users, workspaces, teams -------------------------------------

    pub fn create_user(&self, display_name: &str, email: &str) -> Result<User> {
        let email = email.trim().to_lowercase();
        if email.is_empty() || display_name.trim().is_empty() {
            return Err(Error::EmptyName);
        }
        self.write(|txn| {
            if txn.state.users.values().any(|u| u.email == email) {
                return Err(Error::NameConflict(email.clone()));
            }
            let user = User {
                id: txn.new_id(),
                display_name: display_name.trim().to_string(),
                email: email.clone(),
            };
            txn.state.users.insert(user.id, user.clone());
            Ok(user)
        })
    }

    pub fn user(&self, id: Id) -> Result<User> {
        self.read()
            .users
            .get(&id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("user {id}")))
    }

    pub fn user_by_email(&self, email: &str) -> Option<User> {
        let email = email.trim().to_lowercase();
        self.read().users.values().find(|u| u.email == email).cloned()
    }

    pub fn users(&self) -> Vec<User> {
        self.read().users.values().cloned().collect()
    }

    /// New workspace with `creator` as its only member and a publishing team
    /// named "publishers" containing just the creator.
    pub fn create_workspace(&self, name: &str, creator: Id) -> Result<Workspace> {
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::EmptyName);
        }
        self.write(|txn| {
            if !txn.state.users.contains_key(&creator) {
                return Err(Error::NotFound(format!("user {creator}")));
            }
            if txn.state.workspaces.values().any(|w| w.name == name) {
                return Err(Error::NameConflict(name.to_string()));
            }
            let ws_id = txn.new_id();
            let team = Team {
                id: txn.new_id(),
                workspace_id: ws_id,
                name: "publishers".into(),
                members: [creator].into(),
            };
            let ws = Workspace {
                id: ws_id,
                name: name.to_string(),
                members: [creator].into(),
                teams: [team.id].into(),
                publishing_team: team.id,
                statuses: [DEFAULT_STATUS.to_string()].into(),
                default_status: DEFAULT_STATUS.to_string(),
            };
            txn.state.teams.insert(team.id, team);
            txn.state.workspaces.insert(ws_id, ws.clone());
            Ok(ws)
        })
    }

    pub fn workspace(&self, id: Id) -> Result<Workspace> {
        self.read().workspace(id).cloned()
    }

    pub fn workspaces(&self) -> Vec<Workspace> {
        self.read().workspaces.values().cloned().collect()
    }

    pub fn add_workspace_member(&self, workspace: Id, user: Id) -> Result<()> {
        self.write(|txn| {
            if !txn.state.users.contains_key(&user) {
                return Err(Error::NotFound(format!("user {user}")));
            }
            txn.state.workspace(workspace)?;
            txn.state
                .workspaces
                .get_mut(&workspace)
                .expect("checked")
                .members
                .insert(user);
            Ok(())
        })
    }

    pub fn create_team(&self, workspace: Id, name: &str, members: &[Id]) -> Result<Team> {
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::EmptyName);
        }
        self.write(|txn| {
            let ws = txn.state.workspace(workspace)?;
            if let Some(outsider) = members.iter().find(|m| !ws.members.contains(m)) {
                return Err(Error::NotAMember(outsider.to_string()));
            }
            if ws.teams.iter().any(|t| txn.state.teams[t].name == name) {
                return Err(Error::NameConflict(name.to_string()));
            }
            let team = Team {
                id: txn.new_id(),
                workspace_id: workspace,
                name: name.to_string(),
                members: members.iter().copied().collect(),
            };
            txn.state
                .workspaces
                .get_mut(&workspace)
                .expect("checked")
                .teams
                .insert(team.id);
            txn.state.teams.insert(team.id, team.clone());
            Ok(team)
        })
    }

    pub fn add_team_member(&self, team: Id, user: Id) -> Result<()> {
        self.write(|txn| {
            let t = txn
                .state
                .teams
                .get(&team)
                .ok_or_else(|| Error::NotFound(format!("team {team}")))?;
            let ws = txn.state.workspace(t.workspace_id)?;
            if !ws.members.contains(&user) {
                return Err(Error::NotAMember(user.to_string()));
            }
            txn.state.teams.get_mut(&team).expect("checked").members.insert(user);
            Ok(())
        })
    }

    pub fn team(&self, id: Id) -> Result<Team> {
        self.read()
            .teams
            .get(&id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("team {id}")))
    }

    pub fn set_publishing_team(&self, workspace: Id, team: Id) -> Result<()> {
        self.write(|txn| {
            let ws = txn.state.workspace(workspace)?;
            if !ws.teams.contains(&team) {
                return Err(Error::NotFound(format!("team {team} in workspace")));
            }
            txn.state
                .workspaces
                .get_mut(&workspace)
                .expect("checked")
                .publishing_team = team;
            Ok(())
        })
    }

    /// Replace the workspace's status labels; `default` must be one of them.
    pub fn configure_statuses(&self, workspace: Id, labels: &[&str], default: &str) -> Result<()> {
        let labels: std::collections::BTreeSet<String> =
            labels.iter().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect();
        if !labels.contains(default) {
            return Err(Error::InvalidArgument(format!("default status {default:?} not in label set")));
        }
        self.write(|txn| {
            txn.state.workspace(workspace)?;
            let ws = txn.state.workspaces.get_mut(&workspace).expect("checked");
            ws.statuses = labels.clone();
            ws.default_status = default.to_string();
            Ok(())
        })
    }
}
