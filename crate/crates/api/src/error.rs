use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fluentkb::indexer::IndexError;
use fluentkb::rules::RuleError;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize)]
struct Body<'a> {
    code: &'a str,
    message: &'a str,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_payload", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            code: self.code,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<IndexError> for ApiError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::UnknownAssociation(_) | IndexError::UnknownTranscription(_) => ApiError::not_found(e.to_string()),
            IndexError::AlreadyDecided(_) => ApiError::new(StatusCode::CONFLICT, "already_decided", e.to_string()),
            IndexError::InvalidVerdict(_) | IndexError::InvalidConfig(_) => ApiError::invalid(e.to_string()),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<RuleError> for ApiError {
    fn from(e: RuleError) -> Self {
        match e {
            RuleError::RoundCapExceeded(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "round_cap_exceeded", e.to_string()),
            RuleError::StoredRules(_) => ApiError::invalid(e.to_string()),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<axum::extract::rejection::JsonRejection> for ApiError {
    fn from(e: axum::extract::rejection::JsonRejection) -> Self {
        ApiError::invalid(e.body_text())
    }
}

impl From<axum::extract::rejection::QueryRejection> for ApiError {
    fn from(e: axum::extract::rejection::QueryRejection) -> Self {
        ApiError::invalid(e.body_text())
    }
}
