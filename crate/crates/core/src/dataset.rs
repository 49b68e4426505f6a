//! Users, workspaces, teams, datasets and their activity logs.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::access::GrantSet;
use crate::error::{Error, Result};
use crate::id::Id;
use crate::tree::Tree;

pub const DEFAULT_STATUS: &str = "draft";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: Id,
    pub display_name: String,
    pub email: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Team {
    pub id: Id,
    pub workspace_id: Id,
    pub name: String,
    pub members: BTreeSet<Id>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workspace {
    pub id: Id,
    pub name: String,
    pub members: BTreeSet<Id>,
    pub teams: BTreeSet<Id>,
    pub publishing_team: Id,
    /// Status labels datasets in this workspace may carry.
    pub statuses: BTreeSet<String>,
    pub default_status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contributor {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetAttributes {
    pub name: String,
    #[serde(default)]
    pub subtitle: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub license: Option<String>,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default)]
    pub contributors: Vec<Contributor>,
    #[serde(default)]
    pub banner: Option<String>,
}

/// Partial update of [`DatasetAttributes`]; absent fields are left alone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributePatch {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub subtitle: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub license: Option<String>,
    #[serde(default)]
    pub tags: Option<Vec<String>>,
    #[serde(default)]
    pub contributors: Option<Vec<Contributor>>,
    #[serde(default)]
    pub banner: Option<String>,
}

impl AttributePatch {
    /// Names of the fields this patch touches, in declaration order.
    pub fn touched(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.name.is_some() {
            out.push("name");
        }
        if self.subtitle.is_some() {
            out.push("subtitle");
        }
        if self.description.is_some() {
            out.push("description");
        }
        if self.license.is_some() {
            out.push("license");
        }
        if self.tags.is_some() {
            out.push("tags");
        }
        if self.contributors.is_some() {
            out.push("contributors");
        }
        if self.banner.is_some() {
            out.push("banner");
        }
        out
    }
}

/// Lowercase, trim and deduplicate tags; empty tags are dropped.
pub fn normalize_tags<I, S>(tags: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    tags.into_iter()
        .map(|t| t.as_ref().trim().to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

fn blank(value: &Option<String>) -> bool {
    value.as_deref().is_none_or(|s| s.trim().is_empty())
}

/// Publication fields that are unset or empty, in a fixed order.
pub fn missing_publication_fields(attrs: &DatasetAttributes) -> Vec<String> {
    let mut missing = Vec::new();
    if blank(&attrs.subtitle) {
        missing.push("subtitle".to_string());
    }
    if blank(&attrs.description) {
        missing.push("description".to_string());
    }
    if blank(&attrs.license) {
        missing.push("license".to_string());
    }
    if attrs.tags.is_empty() {
        missing.push("tags".to_string());
    }
    if attrs.contributors.is_empty() {
        missing.push("contributors".to_string());
    }
    missing
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub id: Id,
    /// Shortest unique prefix of the id, at least 8 characters; used in DOIs.
    pub short_id: String,
    pub workspace_id: Id,
    pub owner_id: Id,
    pub attributes: DatasetAttributes,
    pub status: String,
    pub tree: Tree,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub collections: BTreeSet<String>,
    pub deleted: bool,
    pub grants: GrantSet,
    #[serde(default)]
    pub requester_pays: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityAction {
    Created,
    Renamed,
    Moved,
    Deleted,
    Undeleted,
    Uploaded,
    AttributeChanged,
    GrantChanged,
    RecordChanged,
    PublishEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityEntry {
    pub seq: u64,
    pub at: DateTime<Utc>,
    pub user_id: Id,
    pub action: ActivityAction,
    pub detail: String,
}

/// Append-only, per-dataset log with sequence numbers starting at 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityLog {
    entries: Vec<ActivityEntry>,
}

impl ActivityLog {
    pub fn append(
        &mut self,
        at: DateTime<Utc>,
        user_id: Id,
        action: ActivityAction,
        detail: impl Into<String>,
    ) -> u64 {
        let seq = self.entries.len() as u64 + 1;
        self.entries.push(ActivityEntry {
            seq,
            at,
            user_id,
            action,
            detail: detail.into(),
        });
        seq
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ActivityEntry] {
        &self.entries
    }

    /// Entries with `seq >= from_seq`, at most `limit` of them.
    pub fn page(&self, from_seq: u64, limit: usize) -> Vec<ActivityEntry> {
        let start = from_seq.max(1) as usize - 1;
        self.entries.iter().skip(start).take(limit).cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMetrics {
    pub file_count: u64,
    pub total_size_bytes: u64,
    pub record_count: u64,
    pub last_updated: DateTime<Utc>,
}

pub fn validate_dataset_name(name: &str) -> Result<&str> {
    let trimmed = name.trim();
    if trimmed.is_empty() {
        return Err(Error::EmptyName);
    }
    Ok(trimmed)
}
