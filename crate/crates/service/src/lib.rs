//! HTTP API over an [`Atlas`] working set.
//!
//! Public routes serve redaction-masked projections and accept
//! rate-limited submissions. `/moderation/*` routes need the curator
//! bearer token.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use atlas_core::{Atlas, AtlasError, ReleaseStore};
use axum::extract::{ConnectInfo, FromRequestParts};
use axum::http::request::Parts;
use axum::http::header::AUTHORIZATION;
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use tokio::sync::RwLock;

pub mod error;
pub mod filter;
pub mod ratelimit;
mod routes;

pub use error::ApiError;
pub use ratelimit::{RateLimit, RateLimiter};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Working set and releases live under this directory.
    pub data_dir: PathBuf,
    /// Curator bearer token. Without one every moderation route refuses.
    pub curator_token: Option<String>,
    pub rate_limit: RateLimit,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig { data_dir: data_dir.into(), curator_token: None, rate_limit: RateLimit::default() }
    }

    pub fn with_token(mut self, token: impl Into<String>) -> Self {
        self.curator_token = Some(token.into());
        self
    }
}

pub struct Shared {
    pub atlas: RwLock<Atlas>,
    pub releases: ReleaseStore,
    data_dir: PathBuf,
    token: Option<String>,
    limiter: RateLimiter,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl std::ops::Deref for AppState {
    type Target = Shared;

    fn deref(&self) -> &Shared {
        &self.0
    }
}

impl AppState {
    pub fn new(atlas: Atlas, config: ServiceConfig) -> Result<Self, AtlasError> {
        let releases = Atlas::release_store(&config.data_dir)?;
        Ok(AppState(Arc::new(Shared {
            atlas: RwLock::new(atlas),
            releases,
            data_dir: config.data_dir,
            token: config.curator_token.filter(|t| !t.is_empty()),
            limiter: RateLimiter::new(config.rate_limit),
        })))
    }

    /// Write the working set back to disk after a mutation.
    pub(crate) fn persist(&self, atlas: &Atlas) -> Result<(), ApiError> {
        atlas.save(&self.data_dir).map_err(ApiError::from)
    }
}

/// Proof that the request carried the curator token.
#[derive(Debug, Clone, Copy)]
pub struct Curator;

fn same_token(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

impl FromRequestParts<AppState> for Curator {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, ApiError> {
        let expected = state.token.as_deref().ok_or_else(ApiError::unauthorized)?;
        let given = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or_else(ApiError::unauthorized)?;
        if same_token(given.trim().as_bytes(), expected.as_bytes()) {
            Ok(Curator)
        } else {
            Err(ApiError::unauthorized())
        }
    }
}

/// Counts one submission against the caller's window. The caller is the
/// peer address when known, else the first `X-Forwarded-For` hop.
#[derive(Debug, Clone)]
pub struct Submitter(pub String);

impl FromRequestParts<AppState> for Submitter {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, ApiError> {
        let key = parts
            .extensions
            .get::<ConnectInfo<SocketAddr>>()
            .map(|c| c.0.ip().to_string())
            .or_else(|| {
                parts
                    .headers
                    .get("x-forwarded-for")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.split(',').next())
                    .map(|v| v.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".to_string());
        state.limiter.check(&key, Instant::now()).map_err(ApiError::rate_limited)?;
        Ok(Submitter(key))
    }
}

/// Parse a JSON request body into `T`, reporting failures in the API error shape.
pub(crate) fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("bad_body", format!("invalid JSON body: {e}")))
}

pub fn router(state: AppState) -> Router {
    use routes::{metrics, moderation, records, releases};
    Router::new()
        .route("/records", get(records::list))
        .route("/records.geojson", get(records::geojson))
        .route("/records/{id}", get(records::detail))
        .route("/records/{id}/disputes", post(records::open_dispute))
        .route("/records/{id}/annotations", post(records::annotate))
        .route("/records/{id}/redactions", post(records::request_redaction))
        .route("/intake", post(records::submit_intake))
        .route("/schema-proposals", post(records::propose_schema_change))
        .route("/metrics", get(metrics::report))
        .route("/metrics/completeness", get(metrics::completeness))
        .route("/metrics/distributions", get(metrics::distributions))
        .route("/metrics/domains", get(metrics::domains))
        .route("/releases", get(releases::list))
        .route("/releases/{version}/manifest", get(releases::manifest))
        .route("/releases/{version}/artifacts/{name}", get(releases::artifact))
        .route("/moderation/intake", get(moderation::list_intake))
        .route("/moderation/intake/{id}/accept", post(moderation::accept_intake))
        .route("/moderation/intake/{id}/reject", post(moderation::reject_intake))
        .route("/moderation/disputes", get(moderation::list_disputes))
        .route("/moderation/disputes/{id}/reply", post(moderation::reply_to_dispute))
        .route("/moderation/disputes/{id}/resolve", post(moderation::resolve_dispute))
        .route("/moderation/redactions", get(moderation::list_redactions))
        .route("/moderation/redactions/{id}/apply", post(moderation::apply_redaction))
        .route("/moderation/redactions/{id}/decline", post(moderation::decline_redaction))
        .route("/moderation/schema-proposals", get(moderation::list_proposals))
        .route("/moderation/schema-proposals/{id}/accept", post(moderation::accept_proposal))
        .route("/moderation/schema-proposals/{id}/reject", post(moderation::reject_proposal))
        .route("/moderation/records/{id}", get(moderation::record))
        .route("/moderation/records/{id}/edit", post(moderation::edit_record))
        .route("/moderation/decisions", get(moderation::decisions))
        .route("/moderation/releases", post(moderation::cut_release))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

/// Bind `addr` and serve until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state).into_make_service_with_connect_info::<SocketAddr>()).await
}
