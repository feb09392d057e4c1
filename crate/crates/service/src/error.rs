use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lmcanvas_core::store::StoreError;
use lmcanvas_core::CanvasError;
use serde_json::{json, Map, Value};

/// An error response: `{"error": <name>, "message": <text>, ...details}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub error: String,
    pub message: String,
    pub details: Map<String, Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, error: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            error: error.into(),
            message: message.into(),
            details: Map::new(),
        }
    }

    pub fn with_detail(mut self, key: &str, value: Value) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidRequest", message)
    }

    pub fn unknown_document(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownDocument", format!("no document `{id}`"))
    }

    pub fn stale_revision(expected: u64, current: u64) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "StaleRevision",
            format!("request was based on revision {expected}, document is at {current}"),
        )
        .with_detail("revision", json!(current))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "InternalError", message)
    }
}

/// The HTTP status for each core error. Deliberately exhaustive.
pub fn status_for(error: &CanvasError) -> StatusCode {
    use CanvasError::*;
    match error {
        UnknownBlock(_) | UnknownRecord(_) => StatusCode::NOT_FOUND,
        NotATextBlock(_)
        | WrongBlockKind { .. }
        | SameBlock(_)
        | SourceNested { .. }
        | AlreadyNested { .. }
        | DuplicateSlot { .. }
        | WouldCreateCycle { .. }
        | RangeOutOfBounds { .. }
        | SplitsCommandToken { .. }
        | InvalidParams { .. }
        | InvalidGeometry(_)
        | InvalidSinkTarget(_)
        | UnknownProng { .. }
        | ProngOccupied { .. }
        | UnknownSeq { .. }
        | UnresolvedProng { .. }
        | NoSelection
        | DepthExceeded(_)
        | CycleDetected { .. } => StatusCode::BAD_REQUEST,
    }
}

impl From<CanvasError> for ApiError {
    fn from(error: CanvasError) -> Self {
        let api = Self::new(status_for(&error), error.name(), error.to_string());
        match &error {
            CanvasError::CycleDetected { cycle } => api.with_detail("cycle", json!(cycle)),
            _ => api,
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(error: StoreError) -> Self {
        let status = match error {
            StoreError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            StoreError::SchemaVersionUnsupported { .. } | StoreError::Integrity { .. } => StatusCode::BAD_REQUEST,
        };
        let api = Self::new(status, error.name(), error.to_string());
        match &error {
            StoreError::Integrity { cycle: Some(cycle), .. } => api.with_detail("cycle", json!(cycle)),
            _ => api,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = self.details;
        body.insert("error".into(), json!(self.error));
        body.insert("message".into(), json!(self.message));
        (self.status, Json(Value::Object(body))).into_response()
    }
}
