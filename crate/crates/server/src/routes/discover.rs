//! Public routes. Nothing here is visible unless its version is public; an
//! invisible version reads as not found.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use fairhaven_core::platform::PublicCatalogEntry;
use fairhaven_core::publishing::{DatasetVersion, PublicationState};
use fairhaven_core::{Error, Id};
use serde::Serialize;

use super::blocking;
use super::publishing::{snapshot_archive, tar_response};
use crate::app::{AppState, MaybeCaller, Payer};
use crate::error::{ApiError, ApiResult};
use crate::page::{build_page, DatasetPage};

fn hide(e: Error) -> ApiError {
    match e {
        Error::Forbidden => ApiError::from(Error::NotFound("dataset version".into())),
        other => ApiError::from(other),
    }
}

fn parse_status(s: &str) -> Result<PublicationState, ApiError> {
    PublicationState::ALL
        .into_iter()
        .find(|st| st.to_string() == s.trim().to_lowercase())
        .ok_or_else(|| ApiError::BadRequest(format!("unknown status {s:?}")))
}

#[derive(Debug, Serialize)]
pub struct SearchPage {
    pub total: usize,
    pub offset: usize,
    pub results: Vec<PublicCatalogEntry>,
}

/// `q`, repeated `tag`, `status`, `offset` and `limit`.
pub async fn search(State(state): State<Arc<AppState>>, Query(params): Query<Vec<(String, String)>>) -> ApiResult<Json<SearchPage>> {
    let mut text = None;
    let mut tags = Vec::new();
    let mut status = None;
    let mut offset = 0usize;
    let mut limit = 50usize;
    for (key, value) in params {
        match key.as_str() {
            "q" | "text" => text = Some(value),
            "tag" | "tags" => tags.extend(value.split(',').map(str::to_string)),
            "status" => status = Some(parse_status(&value)?),
            "offset" => offset = value.parse().map_err(|_| ApiError::BadRequest("offset must be a number".into()))?,
            "limit" => limit = value.parse().map_err(|_| ApiError::BadRequest("limit must be a number".into()))?,
            _ => {}
        }
    }
    let all = state.platform.catalog(text.as_deref(), &tags, status);
    Ok(Json(SearchPage {
        total: all.len(),
        offset,
        results: all.into_iter().skip(offset).take(limit.min(500)).collect(),
    }))
}

#[derive(Debug, Serialize)]
pub struct PublicDataset {
    pub dataset_id: Id,
    pub latest: u32,
    pub versions: Vec<DatasetVersion>,
}

pub async fn dataset(State(state): State<Arc<AppState>>, Path(id): Path<Id>) -> ApiResult<Json<PublicDataset>> {
    let versions = state.platform.versions(id, None).map_err(hide)?;
    let latest = versions
        .iter()
        .map(|v| v.version)
        .max()
        .ok_or_else(|| ApiError::from(Error::NotFound(format!("dataset {id}"))))?;
    Ok(Json(PublicDataset {
        dataset_id: id,
        latest,
        versions,
    }))
}

pub async fn page(State(state): State<Arc<AppState>>, Path((id, v)): Path<(Id, u32)>) -> ApiResult<Json<DatasetPage>> {
    let (version, snapshot) = state.platform.version(id, v, None).map_err(hide)?;
    let visible = state.platform.versions(id, None)?;
    Ok(Json(build_page(&version, &snapshot, &visible)))
}

pub async fn download(State(state): State<Arc<AppState>>, payer: Payer, Path((id, v)): Path<(Id, u32)>) -> ApiResult<Response> {
    let (name, bytes) = blocking(&state, move |p| snapshot_archive(p, id, v, None, payer.as_deref()))
        .await
        .map_err(|e| match e {
            ApiError::Platform(e) => hide(e),
            other => other,
        })?;
    Ok(tar_response(&name, bytes))
}

fn object_response(key: &str, bytes: Vec<u8>) -> Response {
    let kind = if key.ends_with(".json") {
        "application/json"
    } else if key.ends_with(".md") {
        "text/markdown; charset=utf-8"
    } else if key.ends_with(".csv") {
        "text/csv; charset=utf-8"
    } else {
        "application/octet-stream"
    };
    ([(header::CONTENT_TYPE, kind)], bytes).into_response()
}

pub async fn file(
    State(state): State<Arc<AppState>>,
    payer: Payer,
    Path((id, v, path)): Path<(Id, u32, String)>,
) -> ApiResult<Response> {
    let (version, _) = state.platform.version(id, v, None).map_err(hide)?;
    let key = format!("{}files/{path}", version.snapshot_prefix);
    let bytes = state
        .platform
        .snapshot_object(&key, None, payer.as_deref())
        .map_err(hide)?;
    Ok(object_response(&key, bytes))
}

/// DOI landing: redirect to the version's manifest.
pub async fn resolve_doi(State(state): State<Arc<AppState>>, Path((prefix, suffix)): Path<(String, String)>) -> ApiResult<Response> {
    let key = state.platform.resolve_doi(&format!("{prefix}/{suffix}"))?;
    Ok((StatusCode::FOUND, [(header::LOCATION, format!("/{key}"))]).into_response())
}

/// Raw snapshot objects under `published/`. Embargoed or private versions
/// are refused unless the caller holds a role on the dataset, and read as
/// not found for anonymous callers.
pub async fn published_object(
    State(state): State<Arc<AppState>>,
    MaybeCaller(caller): MaybeCaller,
    payer: Payer,
    Path(key): Path<String>,
) -> ApiResult<Response> {
    let key = format!("published/{key}");
    let bytes = {
        let key = key.clone();
        blocking(&state, move |p| p.snapshot_object(&key, caller, payer.as_deref()))
            .await
            .map_err(|e| match e {
                ApiError::Platform(e) if caller.is_none() => hide(e),
                other => other,
            })?
    };
    Ok(object_response(&key, bytes))
}
