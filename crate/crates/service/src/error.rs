use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use interview_core::SessionError;
use serde::{Deserialize, Serialize};

use crate::store::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    NotFound,
    Conflict,
    BackendUnavailable,
    Validation,
    Incomplete,
    /// Only produced when a shared secret is configured.
    Unauthorized,
}

impl ErrorCode {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::NotFound => 404,
            ErrorCode::Conflict | ErrorCode::Incomplete => 409,
            ErrorCode::BackendUnavailable => 503,
            ErrorCode::Validation => 422,
            ErrorCode::Unauthorized => 401,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::NotFound => "NOT_FOUND",
            ErrorCode::Conflict => "CONFLICT",
            ErrorCode::BackendUnavailable => "BACKEND_UNAVAILABLE",
            ErrorCode::Validation => "VALIDATION",
            ErrorCode::Incomplete => "INCOMPLETE",
            ErrorCode::Unauthorized => "UNAUTHORIZED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    pub http_status: u16,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            http_status: code.http_status(),
        }
    }

    pub fn not_found(session_id: &str) -> Self {
        Self::new(ErrorCode::NotFound, format!("no session {session_id}"))
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let code = match &e {
            SessionError::Backend(_) => ErrorCode::BackendUnavailable,
            SessionError::SessionNotActive => ErrorCode::Conflict,
            SessionError::SessionIncomplete => ErrorCode::Incomplete,
            SessionError::EmptyMessage
            | SessionError::InvalidTree(_)
            | SessionError::TreeMismatch(_)
            | SessionError::SchemaViolation(_)
            | SessionError::Judgment(_)
            | SessionError::Diagnosis(_) => ErrorCode::Validation,
        };
        Self::new(code, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        // A failed write leaves the stored session untouched, same as a backend outage.
        let code = match e {
            StoreError::InvalidSnapshot(_) => ErrorCode::Validation,
            StoreError::Io { .. } | StoreError::Corrupt { .. } => ErrorCode::BackendUnavailable,
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Serialize)]
struct Body<'a> {
    schema_version: u32,
    error: &'a ApiError,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = Json(Body {
            schema_version: crate::SCHEMA_VERSION,
            error: &self,
        });
        (status, body).into_response()
    }
}
