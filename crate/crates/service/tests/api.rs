mod common;

use std::time::Duration;

use atlas_core::release::ARTIFACT_NAMES;
use atlas_core::Atlas;
use atlas_service::RateLimit;
use axum::body::Body;
use axum::http::{Request, StatusCode};
use common::{app, app_with, clock, t2_atlas, TOKEN};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

fn ids(v: &Value) -> Vec<String> {
    v["items"].as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap().to_string()).collect()
}

#[tokio::test]
async fn region_filter_matches_brute_force() {
    let atlas = t2_atlas(131);
    let mut expected: Vec<(String, String)> = atlas
        .records()
        .map(|r| r.to_raw())
        .filter(|raw| raw["region"] == "africa")
        .map(|raw| (raw["canonical_name"].clone(), raw["id"].clone()))
        .collect();
    expected.sort();
    let expected: Vec<String> = expected.into_iter().map(|(_, id)| id).collect();
    assert!(!expected.is_empty());

    let app = app(atlas);
    let r = app.get("/records?region=Africa&page_size=500").await;
    assert_eq!(r.status, StatusCode::OK);
    let body = r.json();
    assert_eq!(body["total"], expected.len());
    assert_eq!(ids(&body), expected);
}

#[tokio::test]
async fn pages_cover_the_set_once() {
    let app = app(t2_atlas(131));
    let mut seen = Vec::new();
    for page in 1..=14 {
        let body = app.get(&format!("/records?page={page}&page_size=10")).await.json();
        assert_eq!(body["total"], 131);
        seen.extend(ids(&body));
    }
    assert_eq!(seen.len(), 131);
    let mut dedup = seen.clone();
    dedup.sort();
    dedup.dedup();
    assert_eq!(dedup.len(), 131);
}

#[tokio::test]
async fn combined_filters_and_search() {
    let atlas = t2_atlas(131);
    let target = atlas.records().nth(17).unwrap().clone();
    let app = app(atlas);
    let needle: String = target.canonical_name.to_uppercase();
    let uri = format!(
        "/records?q={}&tier={}&grade={}",
        needle.replace(' ', "%20"),
        target.participation_tier,
        target.evidence_grade
    );
    let body = app.get(&uri).await.json();
    assert!(ids(&body).contains(&target.id), "{body}");
    for item in body["items"].as_array().unwrap() {
        assert_eq!(item["participation_tier"], target.participation_tier.token());
    }
}

#[tokio::test]
async fn bad_filters_and_pagination() {
    let app = app(t2_atlas(5));
    for (uri, code) in [
        ("/records?colour=red", "bad_filter"),
        ("/records?tier=telepathy", "bad_filter"),
        ("/records?region=Atlantis", "bad_filter"),
        ("/records?page_size=0", "bad_pagination"),
        ("/records?page_size=501", "bad_pagination"),
        ("/records?page=0", "bad_pagination"),
    ] {
        let r = app.get(uri).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{uri}");
        let body = r.json();
        assert_eq!(body["code"], code, "{uri}");
        assert!(body["message"].as_str().is_some_and(|m| !m.is_empty()));
    }
}

#[tokio::test]
async fn unknown_record_and_route() {
    let app = app(t2_atlas(3));
    let r = app.get("/records/nothing-0001").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json()["code"], "not_found");
    assert_eq!(app.get("/nowhere").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn record_detail_carries_history_and_completeness() {
    let atlas = t2_atlas(10);
    let rec = atlas.records().next().unwrap().clone();
    let app = app(atlas);
    let body = app.get(&format!("/records/{}", rec.id)).await.json();
    assert_eq!(body["record"]["id"], rec.id.as_str());
    assert_eq!(body["completeness"]["total"], 9);
    let present = body["completeness"]["fields"].as_array().unwrap().iter().filter(|f| f["present"] == true).count();
    assert_eq!(body["completeness"]["present"], present);
    assert!(!body["history"].as_array().unwrap().is_empty());
    assert_eq!(body["latest_release"], Value::Null);
}

#[tokio::test]
async fn metrics_bytes_match_the_report() {
    let atlas = t2_atlas(131);
    let expected = atlas.metrics().to_json();
    let app = app(atlas);
    let r = app.get("/metrics").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.headers["content-type"], "application/json");
    assert_eq!(r.text(), expected);
    let report: Value = serde_json::from_str(&expected).unwrap();
    assert_eq!(app.get("/metrics/completeness").await.json(), report["completeness"]);
    assert_eq!(app.get("/metrics/distributions").await.json(), report["distributions"]);
    assert_eq!(app.get("/metrics/domains").await.json(), report["provenance_domains"]);
}

#[tokio::test]
async fn moderation_needs_the_token() {
    let app = app(t2_atlas(3));
    assert_eq!(app.get("/moderation/intake").await.status, StatusCode::UNAUTHORIZED);
    let wrong = Request::get("/moderation/intake").header("authorization", "Bearer nope").body(Body::empty()).unwrap();
    assert_eq!(app.send(wrong).await.status, StatusCode::UNAUTHORIZED);
    let basic = Request::get("/moderation/intake")
        .header("authorization", format!("Basic {TOKEN}"))
        .body(Body::empty())
        .unwrap();
    assert_eq!(app.send(basic).await.status, StatusCode::UNAUTHORIZED);
    let r = app.post("/moderation/releases", json!({ "version": "v2026.03" })).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    assert_eq!(r.json()["code"], "unauthorized");
    assert_eq!(app.get_as_curator("/moderation/intake").await.status, StatusCode::OK);
}

#[tokio::test]
async fn no_configured_token_locks_moderation() {
    let dir = tempfile::tempdir().unwrap();
    let state = atlas_service::AppState::new(t2_atlas(2), atlas_service::ServiceConfig::new(dir.path())).unwrap();
    let router = atlas_service::router(state);
    let req = Request::get("/moderation/intake").header("authorization", "Bearer ").body(Body::empty()).unwrap();
    use tower::ServiceExt;
    assert_eq!(router.oneshot(req).await.unwrap().status(), StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn submissions_are_rate_limited_per_client() {
    let atlas = t2_atlas(3);
    let id = atlas.records().next().unwrap().id.clone();
    let app = app_with(atlas, RateLimit { max_requests: 3, window: Duration::from_secs(60) });
    let post = |ip: &'static str| {
        Request::post(format!("/records/{id}/annotations"))
            .header("x-forwarded-for", ip)
            .body(Body::from(json!({ "body": "seen in the field" }).to_string()))
            .unwrap()
    };
    for _ in 0..3 {
        assert_eq!(app.send(post("10.0.0.1")).await.status, StatusCode::CREATED);
    }
    let r = app.send(post("10.0.0.1")).await;
    assert_eq!(r.status, StatusCode::TOO_MANY_REQUESTS);
    assert_eq!(r.json()["code"], "rate_limited");
    assert!(r.headers.contains_key("retry-after"));
    assert_eq!(app.send(post("10.0.0.2")).await.status, StatusCode::CREATED);
    // Reads are never limited.
    assert_eq!(app.get("/records").await.status, StatusCode::OK);
}

#[tokio::test]
async fn release_endpoints() {
    let app = app(t2_atlas(131));
    let r = app.post_as_curator("/moderation/releases", json!({ "version": "v2026.03" })).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    let manifest = r.json();
    assert_eq!(manifest["record_count"], 131);

    let dup = app.post_as_curator("/moderation/releases", json!({ "version": "v2026.03" })).await;
    assert_eq!(dup.status, StatusCode::CONFLICT);
    assert_eq!(dup.json()["code"], "duplicate_version");
    let bad = app.post_as_curator("/moderation/releases", json!({ "version": "2026-03" })).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);

    let list = app.get("/releases").await.json();
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["version"], "v2026.03");
    assert_eq!(app.get("/releases/v2026.03/manifest").await.json(), manifest);

    for name in ARTIFACT_NAMES {
        let r = app.get(&format!("/releases/v2026.03/artifacts/{name}")).await;
        assert_eq!(r.status, StatusCode::OK, "{name}");
        let digest = hex::encode(Sha256::digest(&r.bytes));
        let entry = manifest["artifacts"].as_array().unwrap().iter().find(|a| a["name"] == *name).unwrap();
        assert_eq!(entry["sha256"], digest.as_str());
        assert_eq!(entry["bytes"], r.bytes.len());
    }
    assert_eq!(app.get("/releases/v2026.03/artifacts/governance.json").await.status, StatusCode::NOT_FOUND);
    assert_eq!(app.get("/releases/v2026.03/artifacts/..%2Fmanifest.json").await.status, StatusCode::NOT_FOUND);
    assert_eq!(app.get("/releases/v2031.01/manifest").await.status, StatusCode::NOT_FOUND);
    assert_eq!(app.get("/releases/latest/manifest").await.status, StatusCode::BAD_REQUEST);

    let rec = app.get("/records?page_size=1").await.json()["items"][0]["id"].as_str().unwrap().to_string();
    assert_eq!(app.get(&format!("/records/{rec}")).await.json()["latest_release"], "v2026.03");
}

#[tokio::test]
async fn mutations_are_persisted() {
    let atlas = t2_atlas(4);
    let id = atlas.records().next().unwrap().id.clone();
    let app = app(atlas);
    let r = app.post(&format!("/records/{id}/disputes"), json!({ "claim": "start year is 2019", "links": [] })).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.json()["state"], "open");

    let reloaded = Atlas::load(app.dir.path(), std::sync::Arc::new(Default::default()), clock()).unwrap();
    assert_eq!(reloaded.len(), 4);
    assert_eq!(reloaded.governance().disputes.len(), 1);
}

#[tokio::test]
async fn malformed_bodies_use_the_error_shape() {
    let atlas = t2_atlas(2);
    let id = atlas.records().next().unwrap().id.clone();
    let app = app(atlas);
    let req = Request::post(format!("/records/{id}/disputes")).body(Body::from("{not json")).unwrap();
    let r = app.send(req).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["code"], "bad_body");
    let r = app.post(&format!("/records/{id}/disputes"), json!({ "claim": "   " })).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["code"], "empty_body");
    let r = app.post("/records/none-0001/disputes", json!({ "claim": "x" })).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn geojson_endpoint_respects_filters() {
    let atlas = t2_atlas(131);
    let all = atlas.public_geojson();
    let app = app(atlas);
    let body = app.get("/records.geojson").await.json();
    assert_eq!(body, all);
    let africa = app.get("/records.geojson?region=africa").await.json();
    let n = africa["features"].as_array().unwrap().len();
    assert!(n > 0 && n < all["features"].as_array().unwrap().len());
}
