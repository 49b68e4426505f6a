mod admin;
mod datasets;
mod discover;
mod hooks;
mod metadata;
mod publishing;
mod uploads;
mod workspaces;

use std::sync::Arc;

use axum::routing::{get, post, put};
use axum::Router;
use fairhaven_core::Platform;

use crate::app::AppState;
use crate::error::{ApiError, ApiResult};

pub fn router(state: Arc<AppState>) -> Router {
    let v1 = Router::new()
        .route("/me", get(workspaces::me))
        .route("/users", get(workspaces::users))
        .route("/workspaces", post(workspaces::create).get(workspaces::list))
        .route("/workspaces/{id}", get(workspaces::show))
        .route("/workspaces/{id}/members", post(workspaces::add_member))
        .route("/workspaces/{id}/teams", post(workspaces::create_team))
        .route("/workspaces/{id}/publishing-team", put(workspaces::set_publishing_team))
        .route("/workspaces/{id}/statuses", put(workspaces::configure_statuses))
        .route("/teams/{id}/members", post(workspaces::add_team_member))
        .route("/datasets", post(datasets::create).get(datasets::list))
        .route(
            "/datasets/{id}",
            get(datasets::show).patch(datasets::update_attributes).delete(datasets::delete),
        )
        .route("/datasets/{id}/status", put(datasets::set_status))
        .route("/datasets/{id}/collections", put(datasets::set_collections))
        .route("/datasets/{id}/requester-pays", put(datasets::set_requester_pays))
        .route("/datasets/{id}/transfer", post(datasets::transfer))
        .route("/datasets/{id}/tree", get(datasets::tree).post(datasets::mutate_tree))
        .route("/datasets/{id}/files/{*path}", get(datasets::read_file))
        .route("/datasets/{id}/activity", get(datasets::activity))
        .route("/datasets/{id}/storage", get(datasets::storage))
        .route("/datasets/{id}/grants", get(datasets::grants).post(datasets::grant))
        .route("/datasets/{id}/grants/{kind}/{principal}", axum::routing::delete(datasets::revoke))
        .route("/datasets/{id}/models", get(metadata::models).post(metadata::define_model))
        .route("/models/{id}/records", post(metadata::create_record))
        .route("/datasets/{id}/links", post(metadata::link))
        .route("/datasets/{id}/records", get(metadata::query_records))
        .route("/datasets/{id}/graph", get(metadata::graph))
        .route("/datasets/{id}/metadata", get(metadata::tables))
        .route("/datasets/{id}/manifests", get(uploads::list).post(uploads::create))
        .route("/manifests/{id}", get(uploads::show))
        .route("/manifests/{id}/sync", post(uploads::sync))
        .route("/manifests/{id}/entries", post(uploads::add_entries))
        .route("/manifests/{id}/chunks", put(uploads::chunk))
        .route("/manifests/{id}/entries/{path}/finalize", post(uploads::finalize))
        .route("/manifests/{id}/entries/{path}/reset", post(uploads::reset))
        .route("/manifests/{id}/verify", post(uploads::verify))
        .route("/datasets/{id}/publication", post(publishing::submit))
        .route("/publication/queue", get(publishing::queue))
        .route("/publication/{id}", get(publishing::show))
        .route("/publication/{id}/claim", post(publishing::claim))
        .route("/publication/{id}/withdraw", post(publishing::withdraw))
        .route("/publication/{id}/review", post(publishing::review))
        .route("/publication/{id}/publish", post(publishing::publish))
        .route("/datasets/{id}/versions", get(publishing::versions))
        .route("/datasets/{id}/versions/{v}", get(publishing::version))
        .route("/datasets/{id}/versions/{v}/download", get(publishing::download))
        .route("/webhooks", post(hooks::register).get(hooks::list))
        .route("/webhooks/{id}", get(hooks::show).delete(hooks::remove))
        .route("/webhooks/{id}/deliveries", get(hooks::deliveries))
        .route("/admin/clock", get(admin::clock).post(admin::set_clock))
        .route("/admin/sweep", post(admin::sweep));

    let discover = Router::new()
        .route("/datasets", get(discover::search))
        .route("/datasets/{id}", get(discover::dataset))
        .route("/datasets/{id}/versions/{v}", get(discover::page))
        .route("/datasets/{id}/versions/{v}/download", get(discover::download))
        .route("/datasets/{id}/versions/{v}/files/{*path}", get(discover::file));

    Router::new()
        .nest("/v1", v1)
        .nest("/discover", discover)
        .route("/doi/{prefix}/{suffix}", get(discover::resolve_doi))
        .route("/published/{*key}", get(discover::published_object))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(state)
}

/// Run a platform call on the blocking pool; used for calls that hash or
/// copy payloads.
pub(crate) async fn blocking<T, F>(state: &Arc<AppState>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Platform) -> fairhaven_core::Result<T> + Send + 'static,
{
    let state = state.clone();
    tokio::task::spawn_blocking(move || f(&state.platform))
        .await
        .map_err(|e| ApiError::Internal(format!("worker failed: {e}")))?
        .map_err(ApiError::from)
}
