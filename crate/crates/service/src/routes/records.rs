use atlas_core::metrics::{Percent, COMPLETENESS_FIELDS};
use atlas_core::projection::geojson_from_views;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{params, QueryParams};
use crate::error::ApiError;
use crate::filter::{paginate, parse_query, select};
use crate::{parse_body, AppState, Submitter};

type Created = (StatusCode, Json<Value>);

/// GET /records
pub async fn list(State(state): State<AppState>, query: QueryParams) -> Result<Json<Value>, ApiError> {
    let (filter, page) = parse_query(&params(query)?)?;
    let page = page.unwrap_or_default();
    let atlas = state.atlas.read().await;
    let hits = select(atlas.records(), &filter, atlas.redactions());
    let items: Vec<Value> = paginate(&hits, page).iter().map(|r| Value::Object(atlas.public_view(r))).collect();
    tracing::debug!(total = hits.len(), page = page.page, "list records");
    Ok(Json(json!({
        "total": hits.len(),
        "page": page.page,
        "page_size": page.page_size,
        "items": items,
    })))
}

/// GET /records.geojson
pub async fn geojson(State(state): State<AppState>, query: QueryParams) -> Result<Json<Value>, ApiError> {
    let (filter, page) = parse_query(&params(query)?)?;
    let atlas = state.atlas.read().await;
    let hits = select(atlas.records(), &filter, atlas.redactions());
    let hits = match page {
        Some(p) => paginate(&hits, p),
        None => &hits[..],
    };
    let views: Vec<_> = hits.iter().map(|r| atlas.public_view(r)).collect();
    Ok(Json(geojson_from_views(&views)))
}

/// GET /records/{id}
pub async fn detail(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let atlas = state.atlas.read().await;
    let record = atlas.record(&id).ok_or_else(|| ApiError::not_found(format!("record {id} not found")))?;
    let fields: Vec<Value> = COMPLETENESS_FIELDS
        .iter()
        .map(|f| json!({ "field": f, "present": record.is_present(f).unwrap_or(false) }))
        .collect();
    let present = fields.iter().filter(|f| f["present"] == true).count();
    let latest = state.releases.latest()?;
    Ok(Json(json!({
        "record": atlas.public_view(record),
        "completeness": {
            "present": present,
            "total": fields.len(),
            "percent": Percent::of(present, fields.len()),
            "fields": fields,
        },
        "latest_release": latest,
        "history": atlas.public_history(&id),
        "annotations": atlas.annotations_for(&id),
        "redactions": atlas.redaction_notices(&id),
    })))
}

#[derive(Debug, Deserialize)]
struct DisputeBody {
    claim: String,
    #[serde(default)]
    links: Vec<String>,
    #[serde(default)]
    author: String,
}

/// POST /records/{id}/disputes
pub async fn open_dispute(
    State(state): State<AppState>,
    _: Submitter,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Created, ApiError> {
    let b: DisputeBody = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let d = atlas.open_dispute(&id, &b.claim, &b.links, &b.author)?;
    let out = json!({ "id": d.id, "state": d.state, "record_id": d.record_id });
    state.persist(&atlas)?;
    Ok((StatusCode::CREATED, Json(out)))
}

#[derive(Debug, Deserialize)]
struct AnnotationBody {
    body: String,
    #[serde(default)]
    author: String,
    #[serde(default)]
    link: Option<String>,
}

/// POST /records/{id}/annotations
pub async fn annotate(
    State(state): State<AppState>,
    _: Submitter,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Created, ApiError> {
    let b: AnnotationBody = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let a = serde_json::to_value(atlas.annotate(&id, &b.author, &b.body, b.link)?).expect("annotation serializes");
    state.persist(&atlas)?;
    Ok((StatusCode::CREATED, Json(a)))
}

#[derive(Debug, Deserialize)]
struct RedactionBody {
    fields: Vec<String>,
    reason: String,
    #[serde(default)]
    requester: String,
}

/// POST /records/{id}/redactions
pub async fn request_redaction(
    State(state): State<AppState>,
    _: Submitter,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Created, ApiError> {
    let b: RedactionBody = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let r = atlas.request_redaction(&id, &b.fields, &b.reason, &b.requester)?;
    let out = json!({ "id": r.id, "state": r.state, "record_id": r.record_id, "fields": r.fields });
    state.persist(&atlas)?;
    Ok((StatusCode::CREATED, Json(out)))
}

#[derive(Debug, Deserialize)]
struct IntakeBody {
    draft: Value,
    #[serde(default)]
    submitter: String,
}

/// POST /intake
pub async fn submit_intake(State(state): State<AppState>, _: Submitter, body: Bytes) -> Result<Created, ApiError> {
    let b: IntakeBody = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let s = atlas.submit_intake(&b.draft, &b.submitter)?;
    let out = json!({
        "id": s.id,
        "state": s.state,
        "flags": s.flags,
        "duplicate_of": s.duplicate_of,
    });
    state.persist(&atlas)?;
    Ok((StatusCode::CREATED, Json(out)))
}

#[derive(Debug, Deserialize)]
struct ProposalBody {
    description: String,
    #[serde(default)]
    proposer: String,
    #[serde(default)]
    release_note: String,
}

/// POST /schema-proposals
pub async fn propose_schema_change(
    State(state): State<AppState>,
    _: Submitter,
    body: Bytes,
) -> Result<Created, ApiError> {
    let b: ProposalBody = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let p = atlas.propose_schema_change(&b.description, &b.proposer, &b.release_note)?;
    let out = json!({ "id": p.id, "state": p.state });
    state.persist(&atlas)?;
    Ok((StatusCode::CREATED, Json(out)))
}
