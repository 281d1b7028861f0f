use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use snoopy_core::knn::KnnError;
use snoopy_core::whatif::WhatIfError;
use snoopy_core::{DataError, StudyError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("manifest invalid: {message}")]
    ManifestInvalid { message: String, path: Option<String> },
    #[error("storage failure: {0}")]
    StorageFailure(String),
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("session {0} is busy with another mutation")]
    AlreadyRunning(String),
    #[error("session {0} has no completed run")]
    NoPriorRun(String),
    #[error("{0}")]
    IndexOutOfRange(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("what-if model is degenerate: estimate {estimate} >= {ceiling}")]
    DegenerateModel { estimate: f64, ceiling: f64 },
    #[error("study failed: {0}")]
    Study(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Wire form of every error response.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::ManifestInvalid { .. } => "MANIFEST_INVALID",
            ServiceError::StorageFailure(_) => "STORAGE_FAILURE",
            ServiceError::SessionNotFound(_) => "SESSION_NOT_FOUND",
            ServiceError::AlreadyRunning(_) => "ALREADY_RUNNING",
            ServiceError::NoPriorRun(_) => "NO_PRIOR_RUN",
            ServiceError::IndexOutOfRange(_) => "INDEX_OUT_OF_RANGE",
            ServiceError::InvalidRequest(_) => "INVALID_REQUEST",
            ServiceError::DegenerateModel { .. } => "DEGENERATE_MODEL",
            ServiceError::Study(_) => "STUDY_FAILED",
            ServiceError::Internal(_) => "INTERNAL",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::ManifestInvalid { .. } | ServiceError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::SessionNotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::AlreadyRunning(_) | ServiceError::NoPriorRun(_) => StatusCode::CONFLICT,
            ServiceError::IndexOutOfRange(_) | ServiceError::DegenerateModel { .. } | ServiceError::Study(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::StorageFailure(_) | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn body(&self) -> ErrorBody {
        let detail = match self {
            ServiceError::ManifestInvalid { path, .. } => json!({ "path": path }),
            ServiceError::SessionNotFound(id) | ServiceError::AlreadyRunning(id) | ServiceError::NoPriorRun(id) => {
                json!({ "session_id": id })
            }
            ServiceError::DegenerateModel { estimate, ceiling } => json!({ "estimate": estimate, "ceiling": ceiling }),
            _ => Value::Null,
        };
        ErrorBody {
            code: self.code(),
            message: self.to_string(),
            detail,
        }
    }

    pub(crate) fn manifest(e: DataError) -> Self {
        let path = match &e {
            DataError::MissingFile(p) => Some(p.display().to_string()),
            DataError::Io { path, .. } => Some(path.display().to_string()),
            _ => None,
        };
        ServiceError::ManifestInvalid {
            message: e.to_string(),
            path,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            log::error!("{self}");
        }
        (self.status(), Json(self.body())).into_response()
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::StorageFailure(e.to_string())
    }
}

impl From<StudyError> for ServiceError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Data(d) => ServiceError::manifest(d),
            other => ServiceError::Study(other.to_string()),
        }
    }
}

impl From<KnnError> for ServiceError {
    fn from(e: KnnError) -> Self {
        match e {
            KnnError::IndexOutOfRange { .. } | KnnError::LabelOutOfRange { .. } => {
                ServiceError::IndexOutOfRange(e.to_string())
            }
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

impl From<WhatIfError> for ServiceError {
    fn from(e: WhatIfError) -> Self {
        match e {
            WhatIfError::DegenerateModel { estimate, ceiling } => ServiceError::DegenerateModel { estimate, ceiling },
            other => ServiceError::InvalidRequest(other.to_string()),
        }
    }
}
