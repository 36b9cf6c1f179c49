use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use layoutminer_core::annotate::QueryError;
use layoutminer_core::reconstruct::ReconstructError;
use layoutminer_core::{ScenarioKeyError, StoreError};
use serde::{Deserialize, Serialize};

use crate::sync::SyncError;

/// Wire form of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidRequest", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, "{}", self.message);
        }
        let body = ErrorBody {
            error_code: self.code.to_owned(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

fn status_for(code: &str) -> StatusCode {
    match code {
        "UnknownWidget" | "UnknownScenario" | "MissingBlob" | "NotFound" => StatusCode::NOT_FOUND,
        "VersionConflict"
        | "DuplicateId"
        | "SeqConflict"
        | "UpdateBeforeAdd"
        | "NoLastWidget"
        | "TimestampRegression" => StatusCode::CONFLICT,
        "WrongRole" => StatusCode::FORBIDDEN,
        "StorageFull" => StatusCode::INSUFFICIENT_STORAGE,
        "Io" | "Corrupt" | "SchemaMismatch" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = e.code();
        Self::new(status_for(code), code, e.to_string())
    }
}

impl From<SyncError> for ApiError {
    fn from(e: SyncError) -> Self {
        let code = e.code();
        Self::new(status_for(code), code, e.to_string())
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let code = e.code();
        let status = match e {
            QueryError::InvalidLog(_) | QueryError::Analysis(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<ReconstructError> for ApiError {
    fn from(e: ReconstructError) -> Self {
        let code = e.code();
        let status = match e {
            ReconstructError::InvalidQuadWidth(_) => StatusCode::BAD_REQUEST,
            ReconstructError::InvalidLog(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => status_for(code),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<ScenarioKeyError> for ApiError {
    fn from(e: ScenarioKeyError) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidScenario", e.to_string())
    }
}
