//! Public dataset page, composed from one published snapshot.

use chrono::{DateTime, Datelike, Utc};
use fairhaven_core::dataset::Contributor;
use fairhaven_core::platform::PublishedSnapshot;
use fairhaven_core::publishing::{DatasetVersion, SnapshotFile};
use fairhaven_core::Id;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageHeader {
    pub title: String,
    pub subtitle: Option<String>,
    pub contributors: Vec<Contributor>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageMetrics {
    pub files: u64,
    pub size: u64,
    pub records: u64,
    pub license: String,
}

/// Sections lifted from the readme by heading.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overview {
    pub study_purpose: Option<String>,
    pub data_collection: Option<String>,
    pub primary_conclusion: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionRef {
    pub version: u32,
    pub doi: String,
    pub published_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct About {
    pub versions: Vec<VersionRef>,
    pub tags: Vec<String>,
    pub citation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetPage {
    pub dataset_id: Id,
    pub version: u32,
    pub doi: String,
    pub published_at: DateTime<Utc>,
    pub header: PageHeader,
    pub metrics: PageMetrics,
    pub overview: Overview,
    pub files: Vec<SnapshotFile>,
    pub about: About,
}

fn normalize_heading(line: &str) -> Option<String> {
    let text = line.trim_start();
    let hashes = text.chars().take_while(|c| *c == '#').count();
    if hashes == 0 || hashes > 6 {
        return None;
    }
    let title = text[hashes..].trim().trim_end_matches('#').trim().trim_end_matches(':');
    Some(title.to_lowercase())
}

/// Pull the study purpose, data collection and primary conclusion sections
/// out of a markdown readme. Matching is on heading text, any level.
pub fn parse_overview(readme: &str) -> Overview {
    let mut overview = Overview::default();
    let mut current: Option<&mut Option<String>> = None;
    let mut buffer = String::new();

    fn flush(slot: Option<&mut Option<String>>, buffer: &mut String) {
        if let Some(slot) = slot {
            let text = buffer.trim();
            if !text.is_empty() && slot.is_none() {
                *slot = Some(text.to_string());
            }
        }
        buffer.clear();
    }

    for line in readme.lines() {
        if let Some(heading) = normalize_heading(line) {
            flush(current.take(), &mut buffer);
            current = match heading.as_str() {
                "study purpose" | "purpose" => Some(&mut overview.study_purpose),
                "data collection" => Some(&mut overview.data_collection),
                "primary conclusion" | "primary conclusions" | "conclusion" => Some(&mut overview.primary_conclusion),
                _ => None,
            };
            continue;
        }
        if current.is_some() {
            buffer.push_str(line);
            buffer.push('\n');
        }
    }
    flush(current, &mut buffer);
    overview
}

pub fn citation(contributors: &[Contributor], title: &str, version: &DatasetVersion) -> String {
    let authors: Vec<&str> = contributors.iter().map(|c| c.name.trim()).filter(|n| !n.is_empty()).collect();
    let mut out = String::new();
    if !authors.is_empty() {
        out.push_str(&authors.join(", "));
        out.push(' ');
    }
    out.push_str(&format!(
        "({}). {} (Version {}) [Data set]. fairhaven. https://doi.org/{}",
        version.created_at.year(),
        title,
        version.version,
        version.doi
    ));
    out
}

/// `visible` is every version the requester may see, used for the version list.
pub fn build_page(version: &DatasetVersion, snapshot: &PublishedSnapshot, visible: &[DatasetVersion]) -> DatasetPage {
    let manifest = &snapshot.manifest;
    let mut versions: Vec<VersionRef> = visible
        .iter()
        .map(|v| VersionRef {
            version: v.version,
            doi: v.doi.clone(),
            published_at: v.created_at,
        })
        .collect();
    versions.sort_by_key(|v| std::cmp::Reverse(v.version));
    DatasetPage {
        dataset_id: version.dataset_id,
        version: version.version,
        doi: version.doi.clone(),
        published_at: version.created_at,
        header: PageHeader {
            title: manifest.name.clone(),
            subtitle: version.summary.subtitle.clone(),
            contributors: manifest.contributors.clone(),
            description: manifest.description.clone(),
        },
        metrics: PageMetrics {
            files: manifest.metrics.files,
            size: manifest.metrics.size_bytes,
            records: manifest.metrics.records,
            license: manifest.license.clone(),
        },
        overview: parse_overview(&snapshot.readme),
        files: manifest.files.clone(),
        about: About {
            versions,
            tags: manifest.tags.clone(),
            citation: citation(&manifest.contributors, &manifest.name, version),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overview_sections_by_heading() {
        let readme = "# EEG study\n\nIntro.\n\n## Study Purpose\nMap seizures.\nAcross sites.\n\n### Data collection:\n\nScalp EEG.\n\n## Primary Conclusion ##\nIt works.\n\n## Other\nignored\n";
        let o = parse_overview(readme);
        assert_eq!(o.study_purpose.as_deref(), Some("Map seizures.\nAcross sites."));
        assert_eq!(o.data_collection.as_deref(), Some("Scalp EEG."));
        assert_eq!(o.primary_conclusion.as_deref(), Some("It works."));
    }

    #[test]
    fn missing_or_empty_sections_are_absent() {
        let o = parse_overview("## Study purpose\n\n## Data collection\nSome.\n");
        assert_eq!(o.study_purpose, None);
        assert_eq!(o.data_collection.as_deref(), Some("Some."));
        assert_eq!(parse_overview(""), Overview::default());
    }
}
