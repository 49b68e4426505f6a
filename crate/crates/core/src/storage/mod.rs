//! Versioned object store with storage tiers.
//!
//! Every `put` appends a generation; `delete` only marks the latest one, so
//! it can be undeleted within the undelete window. Idle objects sink from
//! `active` to `archive` to `deep_archive` on lifecycle sweeps and come back
//! only through a restore, which completes after a fixed number of sweeps.

mod backend;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

pub use backend::{FsBackend, MemoryBackend, ObjectBackend};

use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::id::sha256_hex;

pub const PUBLISHED_PREFIX: &str = "published/";
const GIB: f64 = (1u64 << 30) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Active,
    Archive,
    DeepArchive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RestoreState {
    None,
    Pending { remaining_sweeps: u32, requested_at: DateTime<Utc> },
    Restored { at: DateTime<Utc> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generation {
    /// SHA-256 of the payload; absent while the generation is being appended to.
    pub digest: Option<String>,
    pub size: u64,
    pub written_at: DateTime<Utc>,
    pub deleted_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredObject {
    pub key: String,
    pub generations: Vec<Generation>,
    pub tier: Tier,
    pub created_at: DateTime<Utc>,
    pub last_accessed_at: DateTime<Utc>,
    pub restore: RestoreState,
}

impl StoredObject {
    pub fn latest(&self) -> &Generation {
        self.generations.last().expect("objects have at least one generation")
    }

    pub fn is_deleted(&self) -> bool {
        self.latest().deleted_at.is_some()
    }

    pub fn stored_bytes(&self) -> u64 {
        self.generations.iter().map(|g| g.size).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifecyclePolicy {
    pub archive_after_days: i64,
    pub deep_archive_after_days: i64,
    pub undelete_window_days: i64,
    pub restore_delay_ticks: u32,
}

impl Default for LifecyclePolicy {
    fn default() -> Self {
        LifecyclePolicy {
            archive_after_days: 90,
            deep_archive_after_days: 365,
            undelete_window_days: 30,
            restore_delay_ticks: 2,
        }
    }
}

impl LifecyclePolicy {
    pub fn validate(&self) -> Result<()> {
        if self.archive_after_days <= 0 || self.archive_after_days >= self.deep_archive_after_days {
            return Err(Error::InvalidArgument(
                "archive_after_days must be positive and below deep_archive_after_days".into(),
            ));
        }
        if self.undelete_window_days != 30 {
            return Err(Error::InvalidArgument("the undelete window is fixed at 30 days".into()));
        }
        Ok(())
    }

    fn target_tier(&self, idle: Duration) -> Tier {
        if idle >= Duration::days(self.deep_archive_after_days) {
            Tier::DeepArchive
        } else if idle >= Duration::days(self.archive_after_days) {
            Tier::Archive
        } else {
            Tier::Active
        }
    }
}

/// Storage price per GiB-month for each tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostRates {
    pub active: f64,
    pub archive: f64,
    pub deep_archive: f64,
}

impl Default for CostRates {
    fn default() -> Self {
        CostRates {
            active: 0.023,
            archive: 0.004,
            deep_archive: 0.001,
        }
    }
}

impl CostRates {
    pub fn rate(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Active => self.active,
            Tier::Archive => self.archive,
            Tier::DeepArchive => self.deep_archive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub key: String,
    pub from: Tier,
    pub to: Tier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageReport {
    pub bytes_by_tier: BTreeMap<Tier, u64>,
    pub estimated_monthly_cost: f64,
}

/// Read-only view of an object, for listings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectInfo {
    pub key: String,
    pub size: u64,
    pub digest: Option<String>,
    pub tier: Tier,
    pub deleted: bool,
    pub generations: usize,
    pub restore: RestoreState,
}

impl From<&StoredObject> for ObjectInfo {
    fn from(o: &StoredObject) -> Self {
        ObjectInfo {
            key: o.key.clone(),
            size: o.latest().size,
            digest: o.latest().digest.clone(),
            tier: o.tier,
            deleted: o.is_deleted(),
            generations: o.generations.len(),
            restore: o.restore,
        }
    }
}

struct Inner {
    objects: BTreeMap<String, StoredObject>,
    last_sweep: Option<DateTime<Utc>>,
    payer_prefixes: BTreeSet<String>,
}

pub struct ObjectStore {
    inner: Mutex<Inner>,
    backend: Box<dyn ObjectBackend>,
    policy: LifecyclePolicy,
    rates: CostRates,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for ObjectStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObjectStore")
            .field("policy", &self.policy)
            .field("rates", &self.rates)
            .finish_non_exhaustive()
    }
}

impl ObjectStore {
    pub fn open(
        backend: Box<dyn ObjectBackend>,
        policy: LifecyclePolicy,
        rates: CostRates,
        clock: Arc<dyn Clock>,
    ) -> Result<Self> {
        policy.validate()?;
        let objects = backend
            .load()?
            .into_iter()
            .map(|o| (o.key.clone(), o))
            .collect();
        Ok(ObjectStore {
            inner: Mutex::new(Inner {
                objects,
                last_sweep: None,
                payer_prefixes: BTreeSet::new(),
            }),
            backend,
            policy,
            rates,
            clock,
        })
    }

    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        Self::open(
            Box::new(MemoryBackend::new()),
            LifecyclePolicy::default(),
            CostRates::default(),
            clock,
        )
        .expect("default policy is valid")
    }

    pub fn policy(&self) -> &LifecyclePolicy {
        &self.policy
    }

    pub fn rates(&self) -> &CostRates {
        &self.rates
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().expect("object store poisoned")
    }

    /// Reads under `prefix` need a payer token while this is set.
    pub fn set_requester_pays(&self, prefix: &str, enabled: bool) {
        let mut inner = self.lock();
        if enabled {
            inner.payer_prefixes.insert(prefix.to_string());
        } else {
            inner.payer_prefixes.remove(prefix);
        }
    }

    fn payer_ok(inner: &Inner, key: &str, payer: Option<&str>) -> Result<()> {
        let flagged = inner.payer_prefixes.iter().any(|p| key.starts_with(p.as_str()));
        if flagged && payer.is_none_or(|t| t.trim().is_empty()) {
            return Err(Error::PayerRequired);
        }
        Ok(())
    }

    pub fn put(&self, key: &str, bytes: &[u8]) -> Result<ObjectInfo> {
        let now = self.clock.now();
        let mut inner = self.lock();
        let generation = Generation {
            digest: Some(sha256_hex(bytes)),
            size: bytes.len() as u64,
            written_at: now,
            deleted_at: None,
        };
        let mut object = match inner.objects.get(key) {
            Some(existing) => {
                let mut o = existing.clone();
                o.generations.push(generation);
                o
            }
            None => StoredObject {
                key: key.to_string(),
                generations: vec![generation],
                tier: Tier::Active,
                created_at: now,
                last_accessed_at: now,
                restore: RestoreState::None,
            },
        };
        // the new generation inherits the object's tier; only a restore moves it up
        object.last_accessed_at = now;
        let index = object.generations.len() - 1;
        self.backend.write_payload_at(key, index, 0, bytes)?;
        self.backend.save_meta(&object)?;
        let info = ObjectInfo::from(&object);
        inner.objects.insert(key.to_string(), object);
        Ok(info)
    }

    /// Write into the latest generation at `offset`, discarding anything after
    /// it. Creates the object when absent. Used for upload staging.
    pub fn write_at(&self, key: &str, offset: u64, bytes: &[u8]) -> Result<u64> {
        let now = self.clock.now();
        let mut inner = self.lock();
        let mut object = match inner.objects.get(key) {
            Some(o) => o.clone(),
            None => StoredObject {
                key: key.to_string(),
                generations: vec![Generation {
                    digest: None,
                    size: 0,
                    written_at: now,
                    deleted_at: None,
                }],
                tier: Tier::Active,
                created_at: now,
                last_accessed_at: now,
                restore: RestoreState::None,
            },
        };
        if object.tier != Tier::Active {
            return Err(Error::TierNotReadable(key.to_string()));
        }
        let index = object.generations.len() - 1;
        let latest = object.generations.last_mut().expect("non-empty");
        if offset > latest.size {
            return Err(Error::OffsetMismatch { expected: latest.size });
        }
        self.backend.write_payload_at(key, index, offset, bytes)?;
        latest.size = offset + bytes.len() as u64;
        latest.digest = None;
        latest.written_at = now;
        latest.deleted_at = None;
        object.last_accessed_at = now;
        let size = latest.size;
        self.backend.save_meta(&object)?;
        inner.objects.insert(key.to_string(), object);
        Ok(size)
    }

    fn readable<'a>(inner: &'a Inner, key: &str, payer: Option<&str>) -> Result<&'a StoredObject> {
        let object = inner
            .objects
            .get(key)
            .filter(|o| !o.is_deleted())
            .ok_or_else(|| Error::NotFound(format!("object {key:?}")))?;
        Self::payer_ok(inner, key, payer)?;
        if object.tier != Tier::Active {
            return Err(Error::TierNotReadable(key.to_string()));
        }
        Ok(object)
    }

    pub fn get(&self, key: &str, payer: Option<&str>) -> Result<Vec<u8>> {
        let now = self.clock.now();
        let mut inner = self.lock();
        let object = Self::readable(&inner, key, payer)?;
        let bytes = self.backend.read_payload(key, object.generations.len() - 1)?;
        let mut object = object.clone();
        object.last_accessed_at = now;
        self.backend.save_meta(&object)?;
        inner.objects.insert(key.to_string(), object);
        Ok(bytes)
    }

    /// Whether `get` would currently succeed, without touching access times.
    pub fn check_readable(&self, key: &str, payer: Option<&str>) -> Result<()> {
        Self::readable(&self.lock(), key, payer).map(|_| ())
    }

    pub fn delete(&self, key: &str) -> Result<()> {
        let now = self.clock.now();
        let mut inner = self.lock();
        let object = inner
            .objects
            .get_mut(key)
            .filter(|o| !o.is_deleted())
            .ok_or_else(|| Error::NotFound(format!("object {key:?}")))?;
        object.generations.last_mut().expect("non-empty").deleted_at = Some(now);
        self.backend.save_meta(object)?;
        Ok(())
    }

    pub fn undelete(&self, key: &str, now: DateTime<Utc>) -> Result<ObjectInfo> {
        let mut inner = self.lock();
        let object = inner
            .objects
            .get_mut(key)
            .ok_or_else(|| Error::NotFound(format!("object {key:?}")))?;
        let latest = object.generations.last_mut().expect("non-empty");
        let deleted_at = latest
            .deleted_at
            .ok_or_else(|| Error::NotDeleted(key.to_string()))?;
        let window = self.policy.undelete_window_days;
        if now - deleted_at > Duration::days(window) {
            return Err(Error::WindowExpired { days: window });
        }
        latest.deleted_at = None;
        self.backend.save_meta(object)?;
        Ok(ObjectInfo::from(&*object))
    }

    /// Administrative hard delete. Published snapshot objects are refused.
    pub fn purge(&self, key: &str) -> Result<()> {
        if key.starts_with(PUBLISHED_PREFIX) {
            return Err(Error::InvalidArgument("published objects are never purged".into()));
        }
        let mut inner = self.lock();
        if inner.objects.remove(key).is_some() {
            self.backend.remove(key)?;
        }
        Ok(())
    }

    pub fn stat(&self, key: &str) -> Option<ObjectInfo> {
        self.lock().objects.get(key).map(ObjectInfo::from)
    }

    pub fn object(&self, key: &str) -> Option<StoredObject> {
        self.lock().objects.get(key).cloned()
    }

    pub fn list(&self, prefix: &str) -> Vec<ObjectInfo> {
        self.lock()
            .objects
            .range(prefix.to_string()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(_, o)| ObjectInfo::from(o))
            .collect()
    }

    /// One lifecycle sweep at `now`. Keys for which `exempt` holds are left in
    /// place. A second sweep at the same instant does nothing.
    pub fn apply_lifecycle(&self, now: DateTime<Utc>, exempt: &dyn Fn(&str) -> bool) -> Result<Vec<Transition>> {
        let mut inner = self.lock();
        if inner.last_sweep == Some(now) {
            return Ok(Vec::new());
        }
        let mut transitions = Vec::new();
        let mut changed = Vec::new();
        for object in inner.objects.values_mut() {
            if let RestoreState::Pending { remaining_sweeps, requested_at } = object.restore {
                if remaining_sweeps <= 1 {
                    transitions.push(Transition {
                        key: object.key.clone(),
                        from: object.tier,
                        to: Tier::Active,
                    });
                    object.tier = Tier::Active;
                    object.last_accessed_at = now;
                    object.restore = RestoreState::Restored { at: now };
                } else {
                    object.restore = RestoreState::Pending {
                        remaining_sweeps: remaining_sweeps - 1,
                        requested_at,
                    };
                }
                changed.push(object.key.clone());
                continue;
            }
            if exempt(&object.key) {
                continue;
            }
            if object.key.starts_with(PUBLISHED_PREFIX)
                && now - object.created_at < Duration::days(self.policy.archive_after_days)
            {
                continue;
            }
            let target = self.policy.target_tier(now - object.last_accessed_at);
            if target > object.tier {
                transitions.push(Transition {
                    key: object.key.clone(),
                    from: object.tier,
                    to: target,
                });
                object.tier = target;
                changed.push(object.key.clone());
            }
        }
        for key in &changed {
            self.backend.save_meta(&inner.objects[key])?;
        }
        inner.last_sweep = Some(now);
        Ok(transitions)
    }

    pub fn request_restore(&self, key: &str, now: DateTime<Utc>, payer: Option<&str>) -> Result<RestoreState> {
        let mut inner = self.lock();
        Self::payer_ok(&inner, key, payer)?;
        let delay = self.policy.restore_delay_ticks;
        let object = inner
            .objects
            .get_mut(key)
            .ok_or_else(|| Error::NotFound(format!("object {key:?}")))?;
        if object.tier == Tier::Active {
            return Err(Error::NotArchived(key.to_string()));
        }
        if !matches!(object.restore, RestoreState::Pending { .. }) {
            object.restore = if delay == 0 {
                object.tier = Tier::Active;
                object.last_accessed_at = now;
                RestoreState::Restored { at: now }
            } else {
                RestoreState::Pending {
                    remaining_sweeps: delay,
                    requested_at: now,
                }
            };
            self.backend.save_meta(object)?;
        }
        Ok(object.restore)
    }

    /// Bytes per tier and monthly cost over every object under any of `prefixes`.
    /// All retained generations count, deleted or not.
    pub fn storage_report(&self, prefixes: &[String]) -> StorageReport {
        let inner = self.lock();
        let mut bytes_by_tier: BTreeMap<Tier, u64> =
            [Tier::Active, Tier::Archive, Tier::DeepArchive].into_iter().map(|t| (t, 0)).collect();
        for object in inner
            .objects
            .values()
            .filter(|o| prefixes.iter().any(|p| o.key.starts_with(p.as_str())))
        {
            *bytes_by_tier.get_mut(&object.tier).expect("all tiers present") += object.stored_bytes();
        }
        let estimated_monthly_cost = bytes_by_tier
            .iter()
            .map(|(tier, bytes)| *bytes as f64 / GIB * self.rates.rate(*tier))
            .sum();
        StorageReport {
            bytes_by_tier,
            estimated_monthly_cost,
        }
    }
}
