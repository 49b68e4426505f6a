use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use fairhaven_core::platform::FinalizeOutcome;
use fairhaven_core::upload::{ChunkAck, ClientEntryView, EntrySpec, SyncView, UploadManifest, Verification};
use fairhaven_core::Id;
use serde::Deserialize;

use super::blocking;
use crate::app::{AppState, Caller};
use crate::error::ApiResult;

#[derive(Debug, Deserialize)]
pub struct Entries {
    entries: Vec<EntrySpec>,
}

pub async fn create(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<Entries>,
) -> ApiResult<(StatusCode, Json<UploadManifest>)> {
    Ok((StatusCode::CREATED, Json(state.platform.create_manifest(id, caller, &body.entries)?)))
}

pub async fn list(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<Vec<UploadManifest>>> {
    Ok(Json(state.platform.manifests_for(id, caller)?))
}

pub async fn add_entries(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<Entries>,
) -> ApiResult<Json<UploadManifest>> {
    Ok(Json(state.platform.add_manifest_entries(id, caller, &body.entries)?))
}

/// Server view of the manifest with resume offsets.
pub async fn show(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<SyncView>> {
    Ok(Json(state.platform.sync_manifest(id, caller, &[])?))
}

#[derive(Debug, Deserialize)]
pub struct SyncBody {
    #[serde(default)]
    entries: Vec<ClientEntryView>,
}

pub async fn sync(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<SyncBody>,
) -> ApiResult<Json<SyncView>> {
    Ok(Json(state.platform.sync_manifest(id, caller, &body.entries)?))
}

#[derive(Debug, Deserialize)]
pub struct ChunkQuery {
    path: String,
    offset: u64,
}

pub async fn chunk(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Query(q): Query<ChunkQuery>,
    body: Bytes,
) -> ApiResult<Json<ChunkAck>> {
    let ack = blocking(&state, move |p| p.upload_chunk(id, caller, &q.path, q.offset, &body)).await?;
    Ok(Json(ack))
}

pub async fn finalize(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path((id, path)): Path<(Id, String)>,
) -> ApiResult<Json<FinalizeOutcome>> {
    Ok(Json(blocking(&state, move |p| p.finalize_entry(id, caller, &path)).await?))
}

pub async fn reset(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path((id, path)): Path<(Id, String)>,
) -> ApiResult<Json<ChunkAck>> {
    Ok(Json(state.platform.reset_entry(id, caller, &path)?))
}

pub async fn verify(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<Verification>> {
    Ok(Json(state.platform.verify_manifest(id, caller)?))
}
