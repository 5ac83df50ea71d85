pub mod metrics;
pub mod moderation;
pub mod records;
pub mod releases;

use std::collections::BTreeMap;

use axum::extract::rejection::QueryRejection;
use axum::extract::Query;

use crate::error::ApiError;

pub(crate) type QueryParams = Result<Query<BTreeMap<String, String>>, QueryRejection>;

pub(crate) fn params(q: QueryParams) -> Result<BTreeMap<String, String>, ApiError> {
    q.map(|Query(p)| p).map_err(|e| ApiError::bad_request("bad_filter", e.body_text()))
}
