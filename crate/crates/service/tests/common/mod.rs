#![allow(dead_code)]

use std::sync::Arc;

use atlas_core::atlas::Clock;
use atlas_core::csvio::CsvRow;
use atlas_core::fixtures::t2_rows;
use atlas_core::{Atlas, Tables};
use atlas_service::{router, AppState, RateLimit, ServiceConfig};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::{TimeZone, Utc};
use http_body_util::BodyExt;
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

pub const TOKEN: &str = "test-curator-token";

pub fn clock() -> Clock {
    Arc::new(|| Utc.with_ymd_and_hms(2026, 3, 1, 12, 0, 0).unwrap())
}

/// The first `n` rows of the synthetic 131-record set, imported and geocoded.
pub fn t2_atlas(n: usize) -> Atlas {
    let mut atlas = Atlas::new(Arc::new(Tables::default()), clock());
    let rows: Vec<CsvRow> = t2_rows()
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, raw)| CsvRow { line: i as u64 + 2, raw })
        .collect();
    atlas.import_rows(&rows, "initial import", "curator").unwrap();
    atlas.geocode_all("initial geocode", "curator").unwrap();
    atlas
}

pub struct App {
    pub router: Router,
    pub state: AppState,
    pub dir: TempDir,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes)
            .unwrap_or_else(|e| panic!("body is not JSON ({e}): {}", String::from_utf8_lossy(&self.bytes)))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.bytes).into_owned()
    }
}

pub fn app_with(atlas: Atlas, limit: RateLimit) -> App {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ServiceConfig::new(dir.path()).with_token(TOKEN);
    config.rate_limit = limit;
    let state = AppState::new(atlas, config).unwrap();
    App { router: router(state.clone()), state, dir }
}

pub fn app(atlas: Atlas) -> App {
    app_with(atlas, RateLimit { max_requests: 10_000, window: std::time::Duration::from_secs(60) })
}

impl App {
    pub async fn send(&self, req: Request<Body>) -> Reply {
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply { status, headers, bytes }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send(Request::get(uri).body(Body::empty()).unwrap()).await
    }

    pub async fn get_as_curator(&self, uri: &str) -> Reply {
        let req = Request::get(uri).header("authorization", format!("Bearer {TOKEN}")).body(Body::empty()).unwrap();
        self.send(req).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> Reply {
        let req = Request::post(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        self.send(req).await
    }

    pub async fn post_as_curator(&self, uri: &str, body: Value) -> Reply {
        let req = Request::post(uri)
            .header("content-type", "application/json")
            .header("authorization", format!("Bearer {TOKEN}"))
            .body(Body::from(body.to_string()))
            .unwrap();
        self.send(req).await
    }
}
