//! Peer-reviewed publication: the request state machine, immutable versions,
//! DOIs and the self-describing snapshot layout.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dataset::{missing_publication_fields, Contributor, DatasetAttributes};
use crate::error::{Error, Result};
use crate::id::{sha256_hex, Id};
use crate::tree::FileListing;

pub const MAX_EMBARGO_DAYS: u32 = 365;
/// Datasets above this size need a justification to be published.
pub const FREE_PUBLICATION_BYTES: u64 = 25 * (1 << 30);
pub const MOCK_DOI_PREFIX: &str = "10.70000";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PublicationState {
    Draft,
    Requested,
    InReview,
    Rejected,
    Accepted,
    Published,
}

impl PublicationState {
    pub const ALL: [PublicationState; 6] = [
        PublicationState::Draft,
        PublicationState::Requested,
        PublicationState::InReview,
        PublicationState::Rejected,
        PublicationState::Accepted,
        PublicationState::Published,
    ];

    /// States during which the dataset content is frozen.
    pub fn locks_dataset(self) -> bool {
        matches!(
            self,
            PublicationState::Requested | PublicationState::InReview | PublicationState::Accepted
        )
    }
}

impl fmt::Display for PublicationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PublicationState::Draft => "draft",
            PublicationState::Requested => "requested",
            PublicationState::InReview => "in_review",
            PublicationState::Rejected => "rejected",
            PublicationState::Accepted => "accepted",
            PublicationState::Published => "published",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PublicationEvent {
    Submit,
    Withdraw,
    Claim,
    Accept,
    Reject,
    Resubmit,
    Publish,
}

impl PublicationEvent {
    pub const ALL: [PublicationEvent; 7] = [
        PublicationEvent::Submit,
        PublicationEvent::Withdraw,
        PublicationEvent::Claim,
        PublicationEvent::Accept,
        PublicationEvent::Reject,
        PublicationEvent::Resubmit,
        PublicationEvent::Publish,
    ];
}

impl fmt::Display for PublicationEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PublicationEvent::Submit => "submit",
            PublicationEvent::Withdraw => "withdraw",
            PublicationEvent::Claim => "claim",
            PublicationEvent::Accept => "accept",
            PublicationEvent::Reject => "reject",
            PublicationEvent::Resubmit => "resubmit",
            PublicationEvent::Publish => "publish",
        };
        f.write_str(s)
    }
}

/// The only edges of the review workflow; everything else is illegal.
pub fn transition(state: PublicationState, event: PublicationEvent) -> Result<PublicationState> {
    use PublicationEvent as E;
    use PublicationState as S;
    match (state, event) {
        (S::Draft, E::Submit) => Ok(S::Requested),
        (S::Requested, E::Withdraw) => Ok(S::Draft),
        (S::Requested, E::Claim) => Ok(S::InReview),
        (S::InReview, E::Accept) => Ok(S::Accepted),
        (S::InReview, E::Reject) => Ok(S::Rejected),
        (S::Rejected, E::Resubmit) => Ok(S::Requested),
        (S::Accepted, E::Publish) => Ok(S::Published),
        _ => Err(Error::IllegalTransition {
            state: state.to_string(),
            event: event.to_string(),
        }),
    }
}

/// Preconditions of a publication request on the dataset's content.
/// `free_bytes` is the size above which a justification is required.
pub fn check_submission(
    attributes: &DatasetAttributes,
    files: &[FileListing],
    justification: Option<&str>,
    free_bytes: u64,
) -> Result<()> {
    let missing = missing_publication_fields(attributes);
    if !missing.is_empty() {
        return Err(Error::MissingFields(missing));
    }
    if !files.iter().any(|f| f.checksum.is_some()) {
        return Err(Error::EmptyDataset);
    }
    let total: u64 = files.iter().map(|f| f.size).sum();
    if total > free_bytes && justification.is_none_or(|j| j.trim().is_empty()) {
        return Err(Error::JustificationRequired);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewDecision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRequest {
    pub id: Id,
    pub dataset_id: Id,
    pub state: PublicationState,
    pub reviewer_note: Option<String>,
    pub submitted_by: Id,
    pub decided_by: Option<Id>,
    pub justification: Option<String>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    /// Version produced once published.
    pub version: Option<u32>,
}

impl PublicationRequest {
    pub fn apply(&mut self, event: PublicationEvent, at: DateTime<Utc>) -> Result<PublicationState> {
        self.state = transition(self.state, event)?;
        self.updated_at = at;
        Ok(self.state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Doi {
    pub prefix: String,
    pub suffix: String,
}

impl Doi {
    pub fn parse(s: &str) -> Result<Doi> {
        let s = s.trim().trim_start_matches("https://doi.org/").trim_start_matches("doi:");
        match s.split_once('/') {
            Some((prefix, suffix)) if prefix.starts_with("10.") && !suffix.is_empty() => Ok(Doi {
                prefix: prefix.to_string(),
                suffix: suffix.to_string(),
            }),
            _ => Err(Error::UnknownDoi(s.to_string())),
        }
    }
}

impl fmt::Display for Doi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.prefix, self.suffix)
    }
}

/// Registration agency client. Only the mock ships.
pub trait DoiMinter: Send + Sync {
    fn mint(&self, dataset_short_id: &str, version: u32) -> Doi;
}

#[derive(Debug, Clone)]
pub struct MockDoiMinter {
    prefix: String,
}

impl Default for MockDoiMinter {
    fn default() -> Self {
        MockDoiMinter {
            prefix: MOCK_DOI_PREFIX.to_string(),
        }
    }
}

impl DoiMinter for MockDoiMinter {
    fn mint(&self, dataset_short_id: &str, version: u32) -> Doi {
        Doi {
            prefix: self.prefix.clone(),
            suffix: format!("fh.{dataset_short_id}.v{version}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoiRecord {
    pub doi: String,
    pub dataset_id: Id,
    pub version: u32,
    pub target: String,
}

/// Attributes frozen into a version at publication time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionSummary {
    pub name: String,
    pub subtitle: Option<String>,
    pub description: Option<String>,
    pub license: Option<String>,
    pub tags: BTreeSet<String>,
    pub contributors: Vec<Contributor>,
}

impl From<&DatasetAttributes> for VersionSummary {
    fn from(a: &DatasetAttributes) -> Self {
        VersionSummary {
            name: a.name.clone(),
            subtitle: a.subtitle.clone(),
            description: a.description.clone(),
            license: a.license.clone(),
            tags: a.tags.clone(),
            contributors: a.contributors.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetVersion {
    pub dataset_id: Id,
    pub version: u32,
    pub doi: String,
    pub created_at: DateTime<Utc>,
    pub embargo_until: Option<DateTime<Utc>>,
    pub snapshot_prefix: String,
    pub file_count: u64,
    pub total_size_bytes: u64,
    pub record_count: u64,
    pub public: bool,
    pub summary: VersionSummary,
}

impl DatasetVersion {
    pub fn manifest_key(&self) -> String {
        format!("{}manifest.json", self.snapshot_prefix)
    }
}

pub fn snapshot_prefix(dataset_id: Id, version: u32) -> String {
    format!("published/{dataset_id}/{version}/")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotMetrics {
    pub files: u64,
    pub size_bytes: u64,
    pub records: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub path: String,
    pub size: u64,
    pub sha256: String,
}

/// `manifest.json` at the root of every snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub id: Id,
    pub name: String,
    pub version: u32,
    pub doi: String,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embargo_until: Option<DateTime<Utc>>,
    pub description: String,
    pub license: String,
    pub tags: Vec<String>,
    pub contributors: Vec<Contributor>,
    pub metrics: SnapshotMetrics,
    pub files: Vec<SnapshotFile>,
    pub readme: String,
    pub changelog: String,
}

pub struct SnapshotInput<'a> {
    pub dataset_id: Id,
    pub attributes: &'a DatasetAttributes,
    pub version: u32,
    pub doi: &'a str,
    pub created_at: DateTime<Utc>,
    pub embargo_until: Option<DateTime<Utc>>,
    /// Live files, dataset-relative path and content.
    pub files: Vec<(String, Vec<u8>)>,
    /// Output of the metadata graph serializer, keyed `metadata/...`.
    pub metadata: BTreeMap<String, Vec<u8>>,
    pub record_count: u64,
    pub readme: Option<Vec<u8>>,
    pub changelog: Option<Vec<u8>>,
}

/// Lay out a snapshot as relative key → bytes. Same input, same bytes.
pub fn build_snapshot(input: SnapshotInput<'_>) -> (SnapshotManifest, BTreeMap<String, Vec<u8>>) {
    let mut files = input.files;
    files.sort_by(|a, b| a.0.cmp(&b.0));
    let listing: Vec<SnapshotFile> = files
        .iter()
        .map(|(path, bytes)| SnapshotFile {
            path: path.clone(),
            size: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        })
        .collect();
    let attrs = input.attributes;
    let manifest = SnapshotManifest {
        id: input.dataset_id,
        name: attrs.name.clone(),
        version: input.version,
        doi: input.doi.to_string(),
        created_at: input.created_at,
        embargo_until: input.embargo_until,
        description: attrs.description.clone().unwrap_or_default(),
        license: attrs.license.clone().unwrap_or_default(),
        tags: attrs.tags.iter().cloned().collect(),
        contributors: attrs.contributors.clone(),
        metrics: SnapshotMetrics {
            files: listing.len() as u64,
            size_bytes: listing.iter().map(|f| f.size).sum(),
            records: input.record_count,
        },
        files: listing,
        readme: "readme.md".to_string(),
        changelog: "changelog.md".to_string(),
    };

    let mut objects = BTreeMap::new();
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    objects.insert("manifest.json".to_string(), json);
    objects.insert("readme.md".to_string(), input.readme.unwrap_or_default());
    objects.insert("changelog.md".to_string(), input.changelog.unwrap_or_default());
    for (path, bytes) in files {
        objects.insert(format!("files/{path}"), bytes);
    }
    objects.extend(input.metadata);
    (manifest, objects)
}

/// Deterministic order for archive streams: manifest, readme, changelog,
/// files in manifest order, then metadata tables.
pub fn snapshot_order(manifest: &SnapshotManifest, metadata_keys: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut order = vec![
        "manifest.json".to_string(),
        "readme.md".to_string(),
        "changelog.md".to_string(),
    ];
    order.extend(manifest.files.iter().map(|f| format!("files/{}", f.path)));
    let mut meta: Vec<String> = metadata_keys.into_iter().collect();
    meta.sort();
    order.extend(meta);
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn legal_edges() {
        use PublicationEvent as E;
        use PublicationState as S;
        assert_eq!(transition(S::Draft, E::Submit).unwrap(), S::Requested);
        assert_eq!(transition(S::Rejected, E::Resubmit).unwrap(), S::Requested);
        assert_eq!(transition(S::Accepted, E::Publish).unwrap(), S::Published);
        assert_eq!(
            transition(S::Published, E::Accept).unwrap_err(),
            Error::IllegalTransition { state: "published".into(), event: "accept".into() }
        );
    }

    #[test]
    fn mock_doi_format_and_parse() {
        let doi = MockDoiMinter::default().mint("ab12", 1);
        assert_eq!(doi.to_string(), "10.70000/fh.ab12.v1");
        assert_eq!(Doi::parse("https://doi.org/10.70000/fh.ab12.v1").unwrap(), doi);
        assert!(Doi::parse("nonsense").is_err());
    }

    #[test]
    fn snapshot_layout() {
        let attrs = DatasetAttributes {
            name: "D".into(),
            ..Default::default()
        };
        let mut metadata = BTreeMap::new();
        metadata.insert("metadata/relationships.csv".to_string(), b"id,name,from,to\r\n".to_vec());
        let input = || SnapshotInput {
            dataset_id: Id::from_u128(5),
            attributes: &attrs,
            version: 1,
            doi: "10.70000/fh.x.v1",
            created_at: Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
            embargo_until: None,
            files: vec![("b.txt".into(), b"bb".to_vec()), ("a/a.txt".into(), b"a".to_vec())],
            metadata: metadata.clone(),
            record_count: 0,
            readme: None,
            changelog: None,
        };
        let (manifest, objects) = build_snapshot(input());
        assert_eq!(manifest.files[0].path, "a/a.txt");
        assert_eq!(manifest.metrics.size_bytes, 3);
        assert_eq!(objects["readme.md"], b"");
        assert!(objects.contains_key("files/b.txt"));
        assert_eq!(build_snapshot(input()).1, objects);
        let json: serde_json::Value = serde_json::from_slice(&objects["manifest.json"]).unwrap();
        assert!(json.get("embargo_until").is_none());
        let order = snapshot_order(&manifest, metadata.keys().cloned());
        assert_eq!(order.len(), objects.len());
        assert_eq!(order[3], "files/a/a.txt");
    }
}
