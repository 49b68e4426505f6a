use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use fairhaven_core::access::{Grant, Principal, Role};
use fairhaven_core::dataset::{ActivityEntry, AttributePatch, Dataset, DatasetAttributes};
use fairhaven_core::platform::{DatasetSummary, DatasetView, TreeEntry, TreeOp};
use fairhaven_core::storage::StorageReport;
use fairhaven_core::{Error, Id};
use serde::Deserialize;

use super::blocking;
use crate::app::{AppState, Caller, Payer};
use crate::error::{ApiError, ApiResult};

#[derive(Debug, Deserialize)]
pub struct NewDataset {
    workspace_id: Id,
    name: String,
}

pub async fn create(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Json(body): Json<NewDataset>,
) -> ApiResult<(StatusCode, Json<Dataset>)> {
    if !state.platform.workspace(body.workspace_id)?.members.contains(&caller) {
        return Err(Error::Forbidden.into());
    }
    let ds = state.platform.create_dataset(body.workspace_id, caller, &body.name)?;
    Ok((StatusCode::CREATED, Json(ds)))
}

pub async fn list(State(state): State<Arc<AppState>>, Caller(caller): Caller) -> Json<Vec<DatasetSummary>> {
    Json(state.platform.list_datasets(caller))
}

pub async fn show(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<DatasetView>> {
    Ok(Json(state.platform.dataset(id, caller)?))
}

pub async fn update_attributes(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(patch): Json<AttributePatch>,
) -> ApiResult<Json<DatasetAttributes>> {
    Ok(Json(state.platform.update_attributes(id, caller, &patch)?))
}

pub async fn delete(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<StatusCode> {
    state.platform.delete_dataset(id, caller)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
pub struct StatusBody {
    label: String,
}

pub async fn set_status(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<StatusBody>,
) -> ApiResult<Json<DatasetView>> {
    state.platform.set_status(id, caller, &body.label)?;
    Ok(Json(state.platform.dataset(id, caller)?))
}

#[derive(Debug, Deserialize)]
pub struct CollectionsBody {
    collections: Vec<String>,
}

pub async fn set_collections(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<CollectionsBody>,
) -> ApiResult<Json<DatasetView>> {
    state.platform.set_collections(id, caller, &body.collections)?;
    Ok(Json(state.platform.dataset(id, caller)?))
}

#[derive(Debug, Deserialize)]
pub struct RequesterPaysBody {
    enabled: bool,
}

pub async fn set_requester_pays(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<RequesterPaysBody>,
) -> ApiResult<Json<DatasetView>> {
    state.platform.set_requester_pays(id, caller, body.enabled)?;
    Ok(Json(state.platform.dataset(id, caller)?))
}

#[derive(Debug, Deserialize)]
pub struct TransferBody {
    user_id: Id,
}

pub async fn transfer(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<TransferBody>,
) -> ApiResult<Json<Vec<Grant>>> {
    Ok(Json(state.platform.transfer_ownership(id, caller, body.user_id)?))
}

pub async fn tree(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<Vec<TreeEntry>>> {
    Ok(Json(state.platform.list_tree(id, caller)?))
}

pub async fn mutate_tree(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(op): Json<TreeOp>,
) -> ApiResult<Json<Vec<TreeEntry>>> {
    Ok(Json(state.platform.mutate_tree(id, caller, &op)?))
}

pub async fn read_file(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    payer: Payer,
    Path((id, path)): Path<(Id, String)>,
) -> ApiResult<Bytes> {
    let bytes = blocking(&state, move |p| p.read_file(id, caller, &path, payer.as_deref())).await?;
    Ok(Bytes::from(bytes))
}

#[derive(Debug, Deserialize)]
pub struct ActivityQuery {
    #[serde(default)]
    from: u64,
    #[serde(default = "default_limit")]
    limit: usize,
}

fn default_limit() -> usize {
    100
}

pub async fn activity(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Query(q): Query<ActivityQuery>,
) -> ApiResult<Json<Vec<ActivityEntry>>> {
    Ok(Json(state.platform.query_activity(id, caller, q.from, q.limit.min(1000))?))
}

pub async fn storage(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<StorageReport>> {
    Ok(Json(state.platform.storage_report(id, caller)?))
}

pub async fn grants(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<Vec<Grant>>> {
    Ok(Json(state.platform.grants(id, caller)?))
}

#[derive(Debug, Deserialize)]
pub struct GrantBody {
    principal: Principal,
    role: Role,
}

pub async fn grant(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<GrantBody>,
) -> ApiResult<Json<Grant>> {
    Ok(Json(state.platform.grant(id, caller, body.principal, body.role)?))
}

pub async fn revoke(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path((id, kind, principal)): Path<(Id, String, Id)>,
) -> ApiResult<StatusCode> {
    let principal = match kind.as_str() {
        "user" => Principal::User(principal),
        "team" => Principal::Team(principal),
        "workspace" => Principal::Workspace(principal),
        other => return Err(ApiError::from(Error::InvalidArgument(format!("unknown principal type {other:?}")))),
    };
    state.platform.revoke(id, caller, principal)?;
    Ok(StatusCode::NO_CONTENT)
}
