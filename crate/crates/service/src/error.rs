use atlas_core::release::ReleaseError;
use atlas_core::AtlasError;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};

/// JSON error body: a machine-readable code, a human message and optional
/// structured details.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Box<Value>>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), details: None }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(Box::new(details));
        self
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "a valid curator bearer token is required")
    }

    pub fn rate_limited(retry_after: u64) -> Self {
        Self::new(StatusCode::TOO_MANY_REQUESTS, "rate_limited", "too many submissions, try again later")
            .with_details(json!({ "retry_after_secs": retry_after }))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status;
        let mut resp = (status, Json(&self)).into_response();
        if status == StatusCode::TOO_MANY_REQUESTS {
            if let Some(secs) = self.details.as_ref().and_then(|d| d.get("retry_after_secs")).and_then(|v| v.as_u64()) {
                resp.headers_mut().insert(axum::http::header::RETRY_AFTER, secs.into());
            }
        }
        resp
    }
}

impl From<AtlasError> for ApiError {
    fn from(e: AtlasError) -> Self {
        let message = e.to_string();
        let code = e.code();
        let status = match &e {
            AtlasError::UnknownRecord(_) | AtlasError::UnknownItem(_) => StatusCode::NOT_FOUND,
            AtlasError::AlreadyDecided(_) | AtlasError::AlreadyResolved(_) => StatusCode::CONFLICT,
            AtlasError::EmptyReason
            | AtlasError::EmptyBody
            | AtlasError::ValidationFailure(_)
            | AtlasError::Rows(_)
            | AtlasError::ProtectedField(_)
            | AtlasError::UnknownField(_)
            | AtlasError::UnparseableDraft(_) => StatusCode::UNPROCESSABLE_ENTITY,
            AtlasError::Release(ReleaseError::DuplicateVersion(_)) => StatusCode::CONFLICT,
            AtlasError::Release(ReleaseError::InvalidVersion(_)) => StatusCode::BAD_REQUEST,
            AtlasError::Release(ReleaseError::ValidationFailure(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            AtlasError::Release(ReleaseError::UnknownRelease(_) | ReleaseError::MissingArtifact { .. }) => {
                StatusCode::NOT_FOUND
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let details = match &e {
            AtlasError::ValidationFailure(errs) => json!({ "errors": errs }),
            AtlasError::UnparseableDraft(fields) => json!({ "fields": fields }),
            AtlasError::ProtectedField(f) | AtlasError::UnknownField(f) => json!({ "field": f }),
            AtlasError::Rows(rows) => json!({
                "rows": rows.iter().map(|r| json!({ "line": r.line, "errors": r.errors })).collect::<Vec<_>>()
            }),
            AtlasError::Release(ReleaseError::ValidationFailure(list)) => json!({
                "records": list.iter().map(|(id, errs)| json!({ "id": id, "errors": errs })).collect::<Vec<_>>()
            }),
            _ => Value::Null,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %message, "request failed");
        }
        let details = (!details.is_null()).then(|| Box::new(details));
        ApiError { status, code, message, details }
    }
}

impl From<ReleaseError> for ApiError {
    fn from(e: ReleaseError) -> Self {
        match e {
            ReleaseError::UnknownRelease(v) => ApiError::not_found(format!("release {v} not found")),
            ReleaseError::MissingArtifact { version, name } => {
                ApiError::not_found(format!("release {version} has no artifact {name}"))
            }
            ReleaseError::InvalidVersion(v) => ApiError::bad_request("invalid_version", v.to_string()),
            other => AtlasError::from(other).into(),
        }
    }
}
