use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use statelaw_core::analytics::AnalyticsError;
use statelaw_core::annotation::AnnotationError;
use statelaw_core::search::QueryError;

/// Error body returned by every endpoint: `{"status", "code", "message"}`.
/// `code` is stable and meant for programs; `message` is for people.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or unknown bearer token")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::Empty => ApiError::bad_request("empty_query", e.to_string()),
            QueryError::Syntax { .. } => ApiError::bad_request("syntax_error", e.to_string()),
        }
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::UnknownGroup { .. } => ApiError::new(StatusCode::NOT_FOUND, "unknown_group", e.to_string()),
        }
    }
}

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        use AnnotationError::*;
        let msg = e.to_string();
        match e {
            InvalidSpans(_) => ApiError::bad_request("invalid_spans", msg),
            EmptyHelper => ApiError::unauthorized(),
            UnknownTask(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_task", msg),
            DuplicateSubmission { .. } => ApiError::new(StatusCode::CONFLICT, "duplicate_submission", msg),
            NotAssigned { .. } => ApiError::new(StatusCode::CONFLICT, "not_assigned", msg),
            StoreConflict(_) => ApiError::new(StatusCode::CONFLICT, "store_conflict", msg),
            UnknownParagraph { .. } | InvalidRequired | InsufficientRecords => ApiError::bad_request("bad_request", msg),
            Store(_) => ApiError::internal(msg),
        }
    }
}
