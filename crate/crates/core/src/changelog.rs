//! Append-only change log of record edits.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

/// Field name used for whole-record events (creation, removal by merge).
pub const WHOLE_RECORD: &str = "*";
pub const ANONYMOUS: &str = "anonymous";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChangeLogError {
    #[error("change reason must not be empty")]
    EmptyReason,
    #[error("change log sequence is not strictly increasing at {0}")]
    Corrupt(u64),
}

/// ISO-8601 UTC with a trailing `Z`, second precision.
pub mod utc_z {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn format(t: &DateTime<Utc>) -> String {
        t.to_rfc3339_opts(SecondsFormat::Secs, true)
    }

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&raw)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeLogEntry {
    pub sequence: u64,
    pub record_id: String,
    pub field: String,
    pub old_value: String,
    pub new_value: String,
    pub reason: String,
    pub contributor: String,
    #[serde(with = "utc_z")]
    pub timestamp: DateTime<Utc>,
    /// The old value may only appear in restricted output.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub restricted: bool,
}

/// An edit waiting to be appended; the log assigns its sequence number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Change {
    pub record_id: String,
    pub field: String,
    pub old_value: String,
    pub new_value: String,
    pub reason: String,
    pub contributor: Option<String>,
    pub restricted: bool,
}

impl Change {
    pub fn new(record_id: &str, field: &str, old_value: &str, new_value: &str, reason: &str) -> Self {
        Change {
            record_id: record_id.to_string(),
            field: field.to_string(),
            old_value: old_value.to_string(),
            new_value: new_value.to_string(),
            reason: reason.to_string(),
            contributor: None,
            restricted: false,
        }
    }

    pub fn by(mut self, contributor: &str) -> Self {
        let c = contributor.trim();
        self.contributor = (!c.is_empty()).then(|| c.to_string());
        self
    }

    pub fn restricted(mut self) -> Self {
        self.restricted = true;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ChangeLog {
    entries: Vec<ChangeLogEntry>,
}

impl<'de> Deserialize<'de> for ChangeLog {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<ChangeLogEntry>::deserialize(d)?;
        ChangeLog::from_entries(entries).map_err(serde::de::Error::custom)
    }
}

impl ChangeLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<ChangeLogEntry>) -> Result<Self, ChangeLogError> {
        for pair in entries.windows(2) {
            if pair[1].sequence <= pair[0].sequence {
                return Err(ChangeLogError::Corrupt(pair[1].sequence));
            }
        }
        Ok(ChangeLog { entries })
    }

    /// Append with the next sequence number. Earlier entries are never touched.
    pub fn append(&mut self, change: Change, at: DateTime<Utc>) -> Result<&ChangeLogEntry, ChangeLogError> {
        if change.reason.trim().is_empty() {
            return Err(ChangeLogError::EmptyReason);
        }
        let entry = ChangeLogEntry {
            sequence: self.last_sequence() + 1,
            record_id: change.record_id,
            field: change.field,
            old_value: change.old_value,
            new_value: change.new_value,
            reason: change.reason.trim().to_string(),
            contributor: change.contributor.unwrap_or_else(|| ANONYMOUS.to_string()),
            timestamp: at,
            restricted: change.restricted,
        };
        self.entries.push(entry);
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn last_sequence(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.sequence)
    }

    pub fn entries(&self) -> &[ChangeLogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, sequence: u64) -> Option<&ChangeLogEntry> {
        self.entries
            .binary_search_by_key(&sequence, |e| e.sequence)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Entries with `first <= sequence <= last`.
    pub fn range(&self, first: u64, last: u64) -> impl Iterator<Item = &ChangeLogEntry> {
        self.entries
            .iter()
            .filter(move |e| e.sequence >= first && e.sequence <= last)
    }

    pub fn for_record<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a ChangeLogEntry> + 'a {
        self.entries.iter().filter(move |e| e.record_id == id)
    }
}
