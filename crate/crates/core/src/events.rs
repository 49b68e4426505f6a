use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::id::Id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "dataset.updated")]
    DatasetUpdated,
    #[serde(rename = "manifest.completed")]
    ManifestCompleted,
    #[serde(rename = "publication.decided")]
    PublicationDecided,
    #[serde(rename = "version.published")]
    VersionPublished,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::DatasetUpdated => "dataset.updated",
            EventKind::ManifestCompleted => "manifest.completed",
            EventKind::PublicationDecided => "publication.decided",
            EventKind::VersionPublished => "version.published",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub workspace_id: Id,
    pub dataset_id: Id,
    pub payload: Value,
    pub timestamp: DateTime<Utc>,
}

/// Receives platform events after the triggering operation has committed.
pub trait EventSink: Send + Sync {
    fn publish(&self, event: &Event);
}
