//! Public and restricted views of records.
//!
//! The working set always holds original values. Redacted fields are
//! replaced by [`REDACTION_MARKER`] in every public view: CSV cells, JSON
//! records, GeoJSON features and change-log entries.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::changelog::ChangeLogEntry;
use crate::record::ProjectRecord;
use crate::schema::Precision;

pub const REDACTION_MARKER: &str = "[REDACTED]";

/// Fields that are always public.
pub const PROTECTED_FIELDS: &[&str] = &["id", "canonical_name", "dedup_key"];

/// Columns that together encode the location anchor; redacting one hides all.
pub const COORDINATE_FIELDS: &[&str] = &["latitude", "longitude", "precision"];

/// Redacted fields per record id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Redactions {
    by_record: BTreeMap<String, BTreeSet<String>>,
}

impl Redactions {
    pub fn insert(&mut self, record_id: &str, field: &str) {
        self.by_record
            .entry(record_id.to_string())
            .or_default()
            .insert(field.to_string());
    }

    pub fn fields(&self, record_id: &str) -> Option<&BTreeSet<String>> {
        self.by_record.get(record_id)
    }

    pub fn is_redacted(&self, record_id: &str, field: &str) -> bool {
        self.by_record
            .get(record_id)
            .is_some_and(|f| f.contains(field))
    }

    /// Whether historical values of `field` must be hidden. Locality-level
    /// coordinates would reveal a redacted city, so they are hidden too.
    pub fn masks_history(&self, record_id: &str, field: &str) -> bool {
        self.is_redacted(record_id, field)
            || (matches!(field, "latitude" | "longitude") && self.is_redacted(record_id, "city"))
    }

    pub fn is_empty(&self) -> bool {
        self.by_record.is_empty()
    }
}

/// Expand a requested field list so that coordinate columns travel together.
pub fn expand_fields(fields: &[String]) -> Vec<String> {
    let mut out: BTreeSet<String> = fields.iter().cloned().collect();
    if fields.iter().any(|f| COORDINATE_FIELDS.contains(&f.as_str())) {
        out.extend(COORDINATE_FIELDS.iter().map(|s| s.to_string()));
    }
    out.into_iter().collect()
}

/// CSV cells with redacted fields masked.
pub fn public_row(record: &ProjectRecord, redactions: &Redactions) -> Vec<String> {
    let masked = redactions.fields(&record.id);
    crate::record::COLUMNS
        .iter()
        .map(|c| match masked {
            Some(m) if m.contains(*c) => REDACTION_MARKER.to_string(),
            _ => record.field_text(c).unwrap_or_default(),
        })
        .collect()
}

/// Full JSON form of a record (restricted view).
pub fn restricted_json(record: &ProjectRecord) -> Map<String, Value> {
    match serde_json::to_value(record).expect("record serializes") {
        Value::Object(m) => m,
        _ => unreachable!("records serialize to objects"),
    }
}

/// JSON form with redacted fields replaced by the marker.
pub fn public_json(record: &ProjectRecord, redactions: &Redactions) -> Map<String, Value> {
    let mut map = restricted_json(record);
    if let Some(fields) = redactions.fields(&record.id) {
        for f in fields {
            if let Some(v) = map.get_mut(f) {
                *v = Value::String(REDACTION_MARKER.to_string());
            }
        }
    }
    map
}

/// Change-log entry as shown publicly: restricted old values and any value
/// of a currently redacted field are masked.
pub fn public_changelog_entry(entry: &ChangeLogEntry, redactions: &Redactions) -> ChangeLogEntry {
    let mut e = entry.clone();
    let redacted = redactions.masks_history(&e.record_id, &e.field);
    if (e.restricted || redacted) && !e.old_value.is_empty() {
        e.old_value = REDACTION_MARKER.to_string();
    }
    if redacted && !e.new_value.is_empty() {
        e.new_value = REDACTION_MARKER.to_string();
    }
    e.restricted = false;
    e
}

const FEATURE_PROPERTIES: &[&str] = &[
    "id",
    "canonical_name",
    "region",
    "participation_tier",
    "evidence_grade",
    "review_status",
    "precision",
];

/// RFC 7946 FeatureCollection built from JSON record views. Records without
/// a usable public point are left out.
pub fn geojson_from_views<'a>(views: impl IntoIterator<Item = &'a Map<String, Value>>) -> Value {
    let mut features = Vec::new();
    for v in views {
        let precision = v.get("precision").and_then(Value::as_str).and_then(|p| p.parse::<Precision>().ok());
        let (Some(lat), Some(lon)) = (
            v.get("latitude").and_then(Value::as_f64),
            v.get("longitude").and_then(Value::as_f64),
        ) else {
            continue;
        };
        if !matches!(precision, Some(Precision::Locality) | Some(Precision::Country)) {
            continue;
        }
        let mut props = Map::new();
        for key in FEATURE_PROPERTIES {
            let out_key = match *key {
                "canonical_name" => "name",
                "participation_tier" => "tier",
                k => k,
            };
            props.insert(out_key.to_string(), v.get(*key).cloned().unwrap_or(Value::Null));
        }
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": [lon, lat] },
            "properties": props,
        }));
    }
    json!({ "type": "FeatureCollection", "features": features })
}

/// GeoJSON for unredacted records.
pub fn export_geojson<'a>(records: impl IntoIterator<Item = &'a ProjectRecord>) -> Value {
    let views: Vec<_> = records.into_iter().map(restricted_json).collect();
    geojson_from_views(&views)
}
