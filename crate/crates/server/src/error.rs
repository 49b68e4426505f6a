use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fairhaven_core::Error;
use serde_json::{json, Value};

/// Failures while starting the server.
#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Platform(#[from] Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Error returned by a handler.
#[derive(Debug)]
pub enum ApiError {
    Platform(Error),
    Unauthorized,
    BadRequest(String),
    Internal(String),
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::Platform(e)
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

pub fn status_of(error: &Error) -> StatusCode {
    use Error::*;
    match error {
        EmptyName
        | InvalidArgument(_)
        | InvalidSchema(_)
        | SchemaViolation(_)
        | UnknownProperty(_)
        | TypeMismatch(_)
        | CrossDataset
        | FileTooLarge { .. }
        | Overflow { .. }
        | OwnerViaGrant
        | NotAMember(_)
        | MissingFields(_)
        | EmptyDataset
        | JustificationRequired
        | EmbargoTooLong(_) => StatusCode::BAD_REQUEST,
        Forbidden | NotOnPublishingTeam | SelfReview | PayerRequired => StatusCode::FORBIDDEN,
        NotFound(_) | EntryNotFound(_) | UnknownModel(_) | UnknownDoi(_) | UnknownVersion(_) => StatusCode::NOT_FOUND,
        NameConflict(_)
        | SiblingConflict(_)
        | Cycle
        | WindowExpired { .. }
        | DatasetLocked
        | DuplicatePath(_)
        | OffsetMismatch { .. }
        | ManifestFinalized
        | Incomplete { .. }
        | EntryFailed(_)
        | IllegalTransition { .. }
        | PendingRestore { .. }
        | TierNotReadable(_)
        | NotDeleted(_)
        | NotArchived(_) => StatusCode::CONFLICT,
        Persistence(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn body_of(error: &Error) -> Value {
    let mut body = json!({ "error": error.code(), "message": error.to_string() });
    let extra = match error {
        Error::OffsetMismatch { expected } => json!({ "expected_offset": expected }),
        Error::PendingRestore { pending } => json!({ "pending": pending, "retry": "request again after the next lifecycle sweeps" }),
        Error::MissingFields(fields) => json!({ "fields": fields }),
        Error::SchemaViolation(props) => json!({ "properties": props }),
        Error::Incomplete { received, declared } => json!({ "received": received, "declared": declared }),
        Error::FileTooLarge { path, size } => json!({ "path": path, "size": size }),
        Error::IllegalTransition { state, event } => json!({ "state": state, "event": event }),
        _ => Value::Null,
    };
    if let (Value::Object(map), Value::Object(more)) = (&mut body, extra) {
        map.extend(more);
    }
    body
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::Platform(e) => {
                if matches!(e, Error::Persistence(_)) {
                    tracing::error!(error = %e, "persistence failure");
                }
                (status_of(&e), Json(body_of(&e))).into_response()
            }
            ApiError::Unauthorized => (
                StatusCode::UNAUTHORIZED,
                Json(json!({ "error": "Unauthorized", "message": "missing or unknown bearer token" })),
            )
                .into_response(),
            ApiError::BadRequest(message) => (
                StatusCode::BAD_REQUEST,
                Json(json!({ "error": "BadRequest", "message": message })),
            )
                .into_response(),
            ApiError::Internal(message) => {
                tracing::error!(%message, "internal error");
                (
                    StatusCode::INTERNAL_SERVER_ERROR,
                    Json(json!({ "error": "Internal", "message": message })),
                )
                    .into_response()
            }
        }
    }
}
