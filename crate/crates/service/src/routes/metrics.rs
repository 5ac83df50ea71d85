use axum::extract::State;
use axum::http::header::CONTENT_TYPE;
use axum::response::IntoResponse;
use axum::Json;

use crate::AppState;

/// GET /metrics
///
/// Same bytes as the `metrics.json` release artifact and `atlas metrics`.
pub async fn report(State(state): State<AppState>) -> impl IntoResponse {
    let body = state.atlas.read().await.metrics().to_json();
    ([(CONTENT_TYPE, "application/json")], body)
}

/// GET /metrics/completeness
pub async fn completeness(State(state): State<AppState>) -> impl IntoResponse {
    Json(state.atlas.read().await.metrics().completeness)
}

/// GET /metrics/distributions
pub async fn distributions(State(state): State<AppState>) -> impl IntoResponse {
    Json(state.atlas.read().await.metrics().distributions)
}

/// GET /metrics/domains
pub async fn domains(State(state): State<AppState>) -> impl IntoResponse {
    Json(state.atlas.read().await.metrics().provenance_domains)
}
