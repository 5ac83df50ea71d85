use atlas_core::release::ARTIFACT_NAMES;
use atlas_core::{ReleaseManifest, ReleaseVersion};
use axum::extract::{Path, State};
use axum::http::header::CONTENT_TYPE;
use axum::response::IntoResponse;
use axum::Json;
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::AppState;

fn version(raw: &str) -> Result<ReleaseVersion, ApiError> {
    raw.parse().map_err(|e: atlas_core::release::InvalidVersion| ApiError::bad_request("invalid_version", e.to_string()))
}

/// GET /releases
pub async fn list(State(state): State<AppState>) -> Result<Json<Value>, ApiError> {
    let mut out = Vec::new();
    for v in state.releases.list()? {
        let m = state.releases.manifest(&v)?;
        out.push(json!({
            "version": m.version,
            "created_at": m.created_at.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            "schema_version": m.schema_version,
            "record_count": m.record_count,
            "geocoded_count": m.geocoded_count,
        }));
    }
    Ok(Json(Value::Array(out)))
}

/// GET /releases/{version}/manifest
pub async fn manifest(State(state): State<AppState>, Path(v): Path<String>) -> Result<Json<ReleaseManifest>, ApiError> {
    Ok(Json(state.releases.manifest(&version(&v)?)?))
}

/// GET /releases/{version}/artifacts/{name}
///
/// Bytes are checked against the manifest digest before they are served.
pub async fn artifact(
    State(state): State<AppState>,
    Path((v, name)): Path<(String, String)>,
) -> Result<impl IntoResponse, ApiError> {
    let v = version(&v)?;
    if !ARTIFACT_NAMES.contains(&name.as_str()) {
        return Err(ApiError::not_found(format!("release {v} has no artifact {name}")));
    }
    let bytes = state.releases.artifact(&v, &name)?;
    let kind = match name.rsplit('.').next() {
        Some("csv") => "text/csv; charset=utf-8",
        Some("geojson") => "application/geo+json",
        _ => "application/json",
    };
    Ok(([(CONTENT_TYPE, kind)], bytes))
}
