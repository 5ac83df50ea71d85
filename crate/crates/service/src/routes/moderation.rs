use atlas_core::governance::{parse_draft, DisputeOutcome};
use atlas_core::RawRecord;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{params, QueryParams};
use crate::error::ApiError;
use crate::{parse_body, AppState, Curator};

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("governance items serialize")
}

/// Serialize a queue, keeping only items in `?state=` when given.
fn queue<'a, T: Serialize + 'a>(items: impl Iterator<Item = &'a T>, query: QueryParams) -> Result<Json<Value>, ApiError> {
    let p = params(query)?;
    if let Some(k) = p.keys().find(|k| *k != "state") {
        return Err(ApiError::bad_request("bad_filter", format!("unknown filter key {k:?}")));
    }
    let wanted = p.get("state");
    let out: Vec<Value> = items
        .map(to_value)
        .filter(|v| wanted.is_none_or(|w| v["state"].as_str() == Some(w.as_str())))
        .collect();
    Ok(Json(Value::Array(out)))
}

#[derive(Debug, Deserialize)]
struct Decision {
    reason: String,
    #[serde(default)]
    moderator: String,
}

#[derive(Debug, Deserialize)]
struct AcceptIntake {
    reason: String,
    #[serde(default)]
    moderator: String,
    /// Field corrections applied to the draft before validation.
    #[serde(default)]
    overrides: Option<Value>,
}

/// GET /moderation/intake
pub async fn list_intake(_: Curator, State(state): State<AppState>, query: QueryParams) -> Result<Json<Value>, ApiError> {
    let atlas = state.atlas.read().await;
    queue(atlas.governance().intake.values(), query)
}

/// POST /moderation/intake/{id}/accept
pub async fn accept_intake(
    _: Curator,
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: AcceptIntake = parse_body(&body)?;
    let overrides = match &b.overrides {
        Some(v) => parse_draft(v)?,
        None => RawRecord::new(),
    };
    let mut atlas = state.atlas.write().await;
    let record_id = atlas.accept_intake(&id, &b.reason, &b.moderator, &overrides)?;
    let out = json!({
        "record_id": record_id,
        "submission": to_value(&atlas.governance().intake[&id]),
    });
    state.persist(&atlas)?;
    tracing::info!(%id, %record_id, "intake accepted");
    Ok(Json(out))
}

/// POST /moderation/intake/{id}/reject
pub async fn reject_intake(
    _: Curator,
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: Decision = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    atlas.reject_intake(&id, &b.reason, &b.moderator)?;
    let out = to_value(&atlas.governance().intake[&id]);
    state.persist(&atlas)?;
    Ok(Json(out))
}

/// GET /moderation/disputes
pub async fn list_disputes(_: Curator, State(state): State<AppState>, query: QueryParams) -> Result<Json<Value>, ApiError> {
    let atlas = state.atlas.read().await;
    queue(atlas.governance().disputes.values(), query)
}

#[derive(Debug, Deserialize)]
struct Reply {
    body: String,
    #[serde(default)]
    author: String,
}

/// POST /moderation/disputes/{id}/reply
pub async fn reply_to_dispute(
    _: Curator,
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: Reply = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let out = to_value(atlas.reply_to_dispute(&id, &b.author, &b.body)?);
    state.persist(&atlas)?;
    Ok(Json(out))
}

#[derive(Debug, Deserialize)]
struct Resolve {
    #[serde(flatten)]
    outcome: DisputeOutcome,
    reason: String,
    #[serde(default)]
    moderator: String,
}

/// POST /moderation/disputes/{id}/resolve
///
/// Body: `{"outcome": "edit" | "annotation" | "reject", "reason": .., ...}`.
pub async fn resolve_dispute(
    _: Curator,
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: Resolve = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let out = to_value(atlas.resolve_dispute(&id, &b.outcome, &b.reason, &b.moderator)?);
    state.persist(&atlas)?;
    Ok(Json(out))
}

/// GET /moderation/redactions
pub async fn list_redactions(_: Curator, State(state): State<AppState>, query: QueryParams) -> Result<Json<Value>, ApiError> {
    let atlas = state.atlas.read().await;
    queue(atlas.governance().redaction_requests.values(), query)
}

/// POST /moderation/redactions/{id}/apply
pub async fn apply_redaction(
    _: Curator,
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: Decision = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let out = to_value(atlas.apply_redaction(&id, &b.reason, &b.moderator)?);
    state.persist(&atlas)?;
    Ok(Json(out))
}

/// POST /moderation/redactions/{id}/decline
pub async fn decline_redaction(
    _: Curator,
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: Decision = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let out = to_value(atlas.decline_redaction(&id, &b.reason, &b.moderator)?);
    state.persist(&atlas)?;
    Ok(Json(out))
}

/// GET /moderation/schema-proposals
pub async fn list_proposals(_: Curator, State(state): State<AppState>, query: QueryParams) -> Result<Json<Value>, ApiError> {
    let atlas = state.atlas.read().await;
    queue(atlas.governance().proposals.values(), query)
}

/// POST /moderation/schema-proposals/{id}/accept
pub async fn accept_proposal(
    _: Curator,
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: Decision = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let out = to_value(atlas.accept_schema_proposal(&id, &b.reason, &b.moderator)?);
    state.persist(&atlas)?;
    Ok(Json(out))
}

/// POST /moderation/schema-proposals/{id}/reject
pub async fn reject_proposal(
    _: Curator,
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: Decision = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let out = to_value(atlas.reject_schema_proposal(&id, &b.reason, &b.moderator)?);
    state.persist(&atlas)?;
    Ok(Json(out))
}

/// GET /moderation/records/{id}
///
/// Unmasked record, full history and the governance items that touch it.
pub async fn record(_: Curator, State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let atlas = state.atlas.read().await;
    let record = atlas.record(&id).ok_or_else(|| ApiError::not_found(format!("record {id} not found")))?;
    let gov = atlas.governance();
    let history: Vec<_> = atlas.changelog().for_record(&id).collect();
    Ok(Json(json!({
        "record": atlas.restricted_view(record),
        "redacted_fields": atlas.redactions().fields(&id).map(|f| f.iter().collect::<Vec<_>>()).unwrap_or_default(),
        "history": history,
        "disputes": gov.disputes.values().filter(|d| d.record_id == id).collect::<Vec<_>>(),
        "redaction_requests": gov.redaction_requests.values().filter(|r| r.record_id == id).collect::<Vec<_>>(),
        "annotations": atlas.annotations_for(&id),
    })))
}

#[derive(Debug, Deserialize)]
struct Edit {
    field: String,
    value: String,
    reason: String,
    #[serde(default)]
    moderator: String,
}

/// POST /moderation/records/{id}/edit
pub async fn edit_record(
    _: Curator,
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let b: Edit = parse_body(&body)?;
    let moderator = if b.moderator.trim().is_empty() { atlas_core::governance::CURATOR } else { b.moderator.trim() };
    let mut atlas = state.atlas.write().await;
    let changes = atlas.edit_field(&id, &b.field, &b.value, &b.reason, moderator)?;
    let out = json!({
        "changelog": changes,
        "record": atlas.restricted_view(atlas.record(&id).expect("edited record exists")),
    });
    state.persist(&atlas)?;
    Ok(Json(out))
}

/// GET /moderation/decisions
pub async fn decisions(_: Curator, State(state): State<AppState>) -> Json<Value> {
    Json(to_value(&state.atlas.read().await.governance().decisions))
}

#[derive(Debug, Deserialize)]
struct Cut {
    version: String,
}

/// POST /moderation/releases
pub async fn cut_release(_: Curator, State(state): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<Value>), ApiError> {
    let b: Cut = parse_body(&body)?;
    let mut atlas = state.atlas.write().await;
    let manifest = atlas.cut_release(&state.releases, &b.version)?;
    state.persist(&atlas)?;
    tracing::info!(version = %manifest.version, records = manifest.record_count, "release cut");
    Ok((StatusCode::CREATED, Json(to_value(&manifest))))
}
