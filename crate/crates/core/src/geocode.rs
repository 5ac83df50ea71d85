//! Offline geocoding against a gazetteer of country reference points and
//! localities.
//!
//! Resolution order: an exact `(country, locality)` hit gives a locality
//! anchor, a known country gives its reference point, and the `Global` /
//! `Multi-country` sentinels or unknown countries stay ungeocoded. Keys are
//! compared after [`normalize_name`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::harmonize::{is_sentinel, normalize_name};
use crate::record::{GeoPoint, LocationAnchor, ProjectRecord};

const BUILTIN_GAZETTEER: &str = include_str!("../data/gazetteer.tsv");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("gazetteer line {line}: {message}")]
pub struct GazetteerError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GazetteerEntry {
    pub country: String,
    pub locality: Option<String>,
    pub point: GeoPoint,
    /// Free-text note documenting what the point represents.
    pub note: String,
}

#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    countries: HashMap<String, GazetteerEntry>,
    localities: HashMap<(String, String), GazetteerEntry>,
}

/// Non-fatal resolution issue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeocodeWarning {
    /// The city was not in the gazetteer; the anchor fell back to country.
    UnknownLocality { country: String, city: String },
    /// The country was not in the gazetteer; no coordinates assigned.
    UnknownCountry { country: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub anchor: LocationAnchor,
    pub warning: Option<GeocodeWarning>,
}

fn key(s: &str) -> Option<String> {
    normalize_name(s).ok()
}

impl Gazetteer {
    pub fn builtin() -> Self {
        Self::from_tsv(BUILTIN_GAZETTEER).expect("bundled gazetteer is valid")
    }

    /// Parse `type, country, locality, lat, lon[, note]` tab-separated rows.
    pub fn from_tsv(text: &str) -> Result<Self, GazetteerError> {
        let mut g = Gazetteer::default();
        let mut pending = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| GazetteerError { line, message };
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if cols.len() < 5 || cols.len() > 6 {
                return Err(err(format!("expected 5 or 6 columns, found {}", cols.len())));
            }
            let lat: f64 = cols[3].parse().map_err(|_| err(format!("bad latitude {:?}", cols[3])))?;
            let lon: f64 = cols[4].parse().map_err(|_| err(format!("bad longitude {:?}", cols[4])))?;
            let point = GeoPoint::new(lat, lon).ok_or_else(|| err(format!("coordinates ({lat}, {lon}) out of range")))?;
            let country_key = key(cols[1]).ok_or_else(|| err("empty country".into()))?;
            let entry = GazetteerEntry {
                country: cols[1].to_string(),
                locality: (!cols[2].is_empty()).then(|| cols[2].to_string()),
                point,
                note: cols.get(5).copied().unwrap_or("").to_string(),
            };
            match cols[0] {
                "country" => {
                    if entry.locality.is_some() {
                        return Err(err("country rows must leave locality empty".into()));
                    }
                    if g.countries.insert(country_key, entry).is_some() {
                        return Err(err(format!("duplicate country {:?}", cols[1])));
                    }
                }
                "locality" => {
                    let loc_key = key(cols[2]).ok_or_else(|| err("locality rows need a locality".into()))?;
                    pending.push((line, country_key, loc_key, entry));
                }
                other => return Err(err(format!("unknown row type {other:?}"))),
            }
        }
        for (line, country_key, loc_key, entry) in pending {
            if !g.countries.contains_key(&country_key) {
                return Err(GazetteerError {
                    line,
                    message: format!("locality country {:?} has no country row", entry.country),
                });
            }
            if g.localities.insert((country_key, loc_key), entry).is_some() {
                return Err(GazetteerError { line, message: "duplicate locality".into() });
            }
        }
        Ok(g)
    }

    pub fn country(&self, country: &str) -> Option<&GazetteerEntry> {
        self.countries.get(&key(country)?)
    }

    pub fn locality(&self, country: &str, city: &str) -> Option<&GazetteerEntry> {
        self.localities.get(&(key(country)?, key(city)?))
    }

    /// Add or replace a locality row. The country must already exist.
    pub fn insert_locality(&mut self, country: &str, city: &str, point: GeoPoint) -> bool {
        let (Some(ck), Some(lk)) = (key(country), key(city)) else {
            return false;
        };
        if !self.countries.contains_key(&ck) {
            return false;
        }
        let entry = GazetteerEntry {
            country: country.to_string(),
            locality: Some(city.to_string()),
            point,
            note: String::new(),
        };
        self.localities.insert((ck, lk), entry);
        true
    }

    pub fn insert_country(&mut self, country: &str, point: GeoPoint, note: &str) -> bool {
        let Some(ck) = key(country) else { return false };
        let entry = GazetteerEntry {
            country: country.to_string(),
            locality: None,
            point,
            note: note.to_string(),
        };
        self.countries.insert(ck, entry);
        true
    }

    /// Every coordinate the gazetteer can hand out.
    pub fn points(&self) -> impl Iterator<Item = GeoPoint> + '_ {
        self.countries
            .values()
            .chain(self.localities.values())
            .map(|e| e.point)
    }
}

/// Anchor for a location. `suppress_locality` forces country precision
/// even when the locality is known.
pub fn resolve(city: Option<&str>, country: &str, suppress_locality: bool, g: &Gazetteer) -> Resolution {
    if is_sentinel(country) {
        return Resolution { anchor: LocationAnchor::Ungeocoded, warning: None };
    }
    let Some(country_entry) = g.country(country) else {
        return Resolution {
            anchor: LocationAnchor::Ungeocoded,
            warning: Some(GeocodeWarning::UnknownCountry { country: country.to_string() }),
        };
    };
    let city = city.map(str::trim).filter(|c| !c.is_empty());
    let mut warning = None;
    if let Some(city) = city {
        match g.locality(country, city) {
            Some(hit) if !suppress_locality => {
                return Resolution { anchor: LocationAnchor::Locality(hit.point), warning: None };
            }
            Some(_) => {}
            None => {
                warning = Some(GeocodeWarning::UnknownLocality {
                    country: country.to_string(),
                    city: city.to_string(),
                });
            }
        }
    }
    Resolution { anchor: LocationAnchor::Country(country_entry.point), warning }
}

/// Resolve a record's anchor from its own location fields.
pub fn resolve_record(record: &ProjectRecord, g: &Gazetteer) -> Resolution {
    resolve(record.city.as_deref(), &record.country, record.suppress_locality, g)
}

/// Records with mappable coordinates.
pub fn geocoded_count<'a>(records: impl IntoIterator<Item = &'a ProjectRecord>) -> usize {
    records.into_iter().filter(|r| r.anchor.is_geocoded()).count()
}
