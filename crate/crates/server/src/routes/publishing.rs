use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fairhaven_core::publishing::{DatasetVersion, PublicationRequest, ReviewDecision, SnapshotManifest};
use fairhaven_core::{Id, Platform};
use serde::{Deserialize, Serialize};

use super::blocking;
use crate::app::{AppState, Caller, Payer};
use crate::archive::tar_snapshot;
use crate::error::ApiResult;

#[derive(Debug, Default, Deserialize)]
pub struct SubmitBody {
    #[serde(default)]
    justification: Option<String>,
}

pub async fn submit(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    body: Option<Json<SubmitBody>>,
) -> ApiResult<Json<PublicationRequest>> {
    let body = body.map(|b| b.0).unwrap_or_default();
    Ok(Json(state.platform.submit_for_review(id, caller, body.justification.as_deref())?))
}

pub async fn queue(State(state): State<Arc<AppState>>, Caller(caller): Caller) -> Json<Vec<PublicationRequest>> {
    Json(state.platform.review_queue(caller))
}

pub async fn show(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<PublicationRequest>> {
    Ok(Json(state.platform.publication_request(id, caller)?))
}

pub async fn claim(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<PublicationRequest>> {
    Ok(Json(state.platform.claim(id, caller)?))
}

pub async fn withdraw(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<PublicationRequest>> {
    Ok(Json(state.platform.withdraw(id, caller)?))
}

#[derive(Debug, Deserialize)]
pub struct ReviewBody {
    decision: ReviewDecision,
    #[serde(default)]
    note: Option<String>,
}

pub async fn review(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<ReviewBody>,
) -> ApiResult<Json<PublicationRequest>> {
    Ok(Json(state.platform.review(id, caller, body.decision, body.note.as_deref())?))
}

#[derive(Debug, Default, Deserialize)]
pub struct PublishBody {
    #[serde(default)]
    embargo_days: u32,
}

pub async fn publish(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    body: Option<Json<PublishBody>>,
) -> ApiResult<Json<DatasetVersion>> {
    let embargo = body.map(|b| b.0.embargo_days).unwrap_or(0);
    Ok(Json(blocking(&state, move |p| p.publish(id, caller, embargo)).await?))
}

pub async fn versions(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
) -> ApiResult<Json<Vec<DatasetVersion>>> {
    Ok(Json(state.platform.versions(id, Some(caller))?))
}

#[derive(Debug, Serialize)]
pub struct VersionDetail {
    pub version: DatasetVersion,
    pub manifest: SnapshotManifest,
}

pub async fn version(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path((id, v)): Path<(Id, u32)>,
) -> ApiResult<Json<VersionDetail>> {
    let (version, snapshot) = state.platform.version(id, v, Some(caller))?;
    Ok(Json(VersionDetail {
        version,
        manifest: snapshot.manifest,
    }))
}

/// Tar of a whole snapshot in archive order.
pub(crate) fn snapshot_archive(
    platform: &Platform,
    dataset: Id,
    version: u32,
    caller: Option<Id>,
    payer: Option<&str>,
) -> fairhaven_core::Result<(String, Vec<u8>)> {
    let (v, _) = platform.version(dataset, version, caller)?;
    let objects = platform.rehydrate(dataset, version, caller, payer)?;
    let keys = platform.snapshot_keys(dataset, version, caller)?;
    let entries = keys.iter().map(|k| {
        let rel = &k[v.snapshot_prefix.len()..];
        (rel, objects[rel].as_slice())
    });
    let bytes = tar_snapshot(entries, v.created_at)?;
    let name = format!("{}-v{}.tar", v.doi.replace('/', "_"), v.version);
    Ok((name, bytes))
}

pub(crate) fn tar_response(name: &str, bytes: Vec<u8>) -> Response {
    (
        [
            (header::CONTENT_TYPE, "application/x-tar".to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{name}\"")),
        ],
        bytes,
    )
        .into_response()
}

pub async fn download(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    payer: Payer,
    Path((id, v)): Path<(Id, u32)>,
) -> ApiResult<Response> {
    let (name, bytes) = blocking(&state, move |p| snapshot_archive(p, id, v, Some(caller), payer.as_deref())).await?;
    Ok(tar_response(&name, bytes))
}
