//! The mutable working set: records, change log, governance queues and the
//! reference tables used to derive region and coordinates.
//!
//! Every mutation goes through methods on [`Atlas`] and leaves one change-log
//! entry per changed column. Published releases are never touched here.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::changelog::{Change, ChangeLog, ChangeLogEntry, ChangeLogError, WHOLE_RECORD};
use crate::csvio::{export_csv, import_csv, write_table, CsvError, CsvRow, RowError};
use crate::geocode::{resolve_record, Gazetteer, GeocodeWarning};
use crate::governance::GovernanceState;
use crate::harmonize::{dedupe, map_region, normalize_country, CountryAliasTable, HarmonizeWarning, MergeEntry, RegionTable};
use crate::metrics::{metrics_report, MetricsReport};
use crate::projection::{
    geojson_from_views, public_changelog_entry, public_json, public_row, restricted_json, Redactions,
    PROTECTED_FIELDS,
};
use crate::record::{assign_id, column, mvpd_check, validate_record, ProjectRecord, RawRecord, ValidationErrors, COLUMNS};
use crate::release::{
    ArtifactSet, ChangelogRange, ReleaseError, ReleaseManifest, ReleaseStore, ReleaseVersion, artifact_entry,
    ARTIFACT_NAMES, CHANGELOG_JSON, METRICS_JSON, RECORDS_CSV, RECORDS_GEOJSON, RECORDS_JSON,
};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

/// Wall clock truncated to whole seconds, matching the serialized form.
pub fn system_clock() -> Clock {
    Arc::new(|| Utc::now().trunc_subsecs(0))
}

/// Reference tables used for harmonization and geocoding.
#[derive(Debug, Clone)]
pub struct Tables {
    pub aliases: CountryAliasTable,
    pub regions: RegionTable,
    pub gazetteer: Gazetteer,
}

impl Default for Tables {
    fn default() -> Self {
        Tables {
            aliases: CountryAliasTable::builtin(),
            regions: RegionTable::builtin(),
            gazetteer: Gazetteer::builtin(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AtlasError {
    #[error("unknown record {0}")]
    UnknownRecord(String),
    #[error("unknown governance item {0}")]
    UnknownItem(String),
    #[error("{0} has already been decided")]
    AlreadyDecided(String),
    #[error("{0} has already been resolved")]
    AlreadyResolved(String),
    #[error("a non-empty reason is required")]
    EmptyReason,
    #[error("body must not be empty")]
    EmptyBody,
    #[error("record failed validation: {0}")]
    ValidationFailure(ValidationErrors),
    #[error("{} row(s) failed validation", .0.len())]
    Rows(Vec<RowError>),
    #[error("field {0} is always public and cannot be changed this way")]
    ProtectedField(String),
    #[error("unknown field {0}")]
    UnknownField(String),
    #[error("draft could not be parsed; bad fields: {}", .0.join(", "))]
    UnparseableDraft(Vec<String>),
    #[error(transparent)]
    Release(#[from] ReleaseError),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    ChangeLog(ChangeLogError),
}

impl From<ChangeLogError> for AtlasError {
    fn from(e: ChangeLogError) -> Self {
        match e {
            ChangeLogError::EmptyReason => AtlasError::EmptyReason,
            other => AtlasError::ChangeLog(other),
        }
    }
}

impl AtlasError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            AtlasError::UnknownRecord(_) => "unknown_record",
            AtlasError::UnknownItem(_) => "unknown_item",
            AtlasError::AlreadyDecided(_) => "already_decided",
            AtlasError::AlreadyResolved(_) => "already_resolved",
            AtlasError::EmptyReason => "empty_reason",
            AtlasError::EmptyBody => "empty_body",
            AtlasError::ValidationFailure(_) | AtlasError::Rows(_) => "validation_failure",
            AtlasError::ProtectedField(_) => "protected_field",
            AtlasError::UnknownField(_) => "unknown_field",
            AtlasError::UnparseableDraft(_) => "unparseable_draft",
            AtlasError::Release(ReleaseError::DuplicateVersion(_)) => "duplicate_version",
            AtlasError::Release(ReleaseError::ValidationFailure(_)) => "validation_failure",
            AtlasError::Release(ReleaseError::InvalidVersion(_)) => "invalid_version",
            AtlasError::Release(_) => "release_error",
            AtlasError::Csv(_) => "csv_error",
            AtlasError::Json { .. } => "json_error",
            AtlasError::Io(_) => "io_error",
            AtlasError::ChangeLog(_) => "changelog_error",
        }
    }
}

pub(crate) fn require_reason(reason: &str) -> Result<(), AtlasError> {
    if reason.trim().is_empty() {
        Err(AtlasError::EmptyReason)
    } else {
        Ok(())
    }
}

/// Output format for [`Atlas::export`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
    GeoJson,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            "geojson" => Ok(ExportFormat::GeoJson),
            other => Err(format!("unknown export format {other:?}: expected csv, json or geojson")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ImportSummary {
    pub added: Vec<String>,
    pub updated: Vec<String>,
    pub unchanged: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HarmonizeReport {
    pub countries_normalized: usize,
    pub regions_remapped: usize,
    pub merges: Vec<MergeEntry>,
    pub warnings: Vec<(String, HarmonizeWarning)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GeocodeReport {
    pub geocoded: usize,
    pub ungeocoded: usize,
    pub changed: usize,
    pub warnings: Vec<(String, GeocodeWarning)>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct AtlasState {
    schema_version: u32,
    pending_release_notes: Vec<String>,
    last_released_sequence: u64,
}

const WORKING_DIR: &str = "working";
const RELEASES_DIR: &str = "releases";
const STATE_JSON: &str = "state.json";
const GOVERNANCE_JSON: &str = "governance.json";

pub struct Atlas {
    records: BTreeMap<String, ProjectRecord>,
    changelog: ChangeLog,
    pub(crate) governance: GovernanceState,
    schema_version: u32,
    pending_release_notes: Vec<String>,
    last_released_sequence: u64,
    tables: Arc<Tables>,
    clock: Clock,
}

impl std::fmt::Debug for Atlas {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Atlas")
            .field("records", &self.records.len())
            .field("changelog", &self.changelog.len())
            .field("schema_version", &self.schema_version)
            .finish_non_exhaustive()
    }
}

impl Default for Atlas {
    fn default() -> Self {
        Atlas::new(Arc::new(Tables::default()), system_clock())
    }
}

impl Atlas {
    pub fn new(tables: Arc<Tables>, clock: Clock) -> Self {
        Atlas {
            records: BTreeMap::new(),
            changelog: ChangeLog::new(),
            governance: GovernanceState::default(),
            schema_version: 1,
            pending_release_notes: Vec::new(),
            last_released_sequence: 0,
            tables,
            clock,
        }
    }

    pub fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    pub fn records(&self) -> impl Iterator<Item = &ProjectRecord> {
        self.records.values()
    }

    pub fn record(&self, id: &str) -> Option<&ProjectRecord> {
        self.records.get(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn changelog(&self) -> &ChangeLog {
        &self.changelog
    }

    pub fn schema_version(&self) -> u32 {
        self.schema_version
    }

    pub fn pending_release_notes(&self) -> &[String] {
        &self.pending_release_notes
    }

    pub fn redactions(&self) -> &Redactions {
        &self.governance.redactions
    }

    pub fn governance(&self) -> &GovernanceState {
        &self.governance
    }

    pub(crate) fn add_release_note(&mut self, note: String) {
        self.pending_release_notes.push(note);
    }

    pub(crate) fn bump_schema_version(&mut self) -> u32 {
        self.schema_version += 1;
        self.schema_version
    }

    // ---- logging primitives -------------------------------------------

    fn log(&mut self, change: Change) -> Result<u64, AtlasError> {
        let at = self.now();
        Ok(self.changelog.append(change, at)?.sequence)
    }

    /// Append one entry per changed column between two versions of a record.
    fn log_diff(
        &mut self,
        old: &ProjectRecord,
        new: &ProjectRecord,
        reason: &str,
        contributor: &str,
        restricted: bool,
    ) -> Result<Vec<u64>, AtlasError> {
        let (a, b) = (old.to_raw(), new.to_raw());
        let mut seqs = Vec::new();
        for c in COLUMNS {
            if a[*c] != b[*c] {
                let mut change = Change::new(&new.id, c, &a[*c], &b[*c], reason).by(contributor);
                if restricted || self.governance.redactions.masks_history(&new.id, c) {
                    change = change.restricted();
                }
                seqs.push(self.log(change)?);
            }
        }
        Ok(seqs)
    }

    pub(crate) fn log_entry(&mut self, change: Change) -> Result<u64, AtlasError> {
        self.log(change)
    }

    /// Add a record under a fresh id derived from its dedup key.
    pub fn insert_new(&mut self, mut record: ProjectRecord, reason: &str, contributor: &str) -> Result<(String, u64), AtlasError> {
        require_reason(reason)?;
        record.id = assign_id(&record.dedup_key, |id| self.records.contains_key(id));
        self.insert_with_id(record, reason, contributor)
    }

    /// Add a record under the id it carries; an existing id is replaced.
    fn insert_with_id(&mut self, record: ProjectRecord, reason: &str, contributor: &str) -> Result<(String, u64), AtlasError> {
        require_reason(reason)?;
        let id = record.id.clone();
        let change = Change::new(&id, WHOLE_RECORD, "", &record.canonical_name, reason).by(contributor);
        let seq = self.log(change)?;
        self.records.insert(id.clone(), record);
        Ok((id, seq))
    }

    /// Swap a record for a new version, logging each changed column.
    pub(crate) fn replace_record(
        &mut self,
        record: ProjectRecord,
        reason: &str,
        contributor: &str,
        restricted: bool,
    ) -> Result<Vec<u64>, AtlasError> {
        require_reason(reason)?;
        let old = self
            .records
            .get(&record.id)
            .cloned()
            .ok_or_else(|| AtlasError::UnknownRecord(record.id.clone()))?;
        let seqs = self.log_diff(&old, &record, reason, contributor, restricted)?;
        self.records.insert(record.id.clone(), record);
        Ok(seqs)
    }

    fn remove_record(&mut self, id: &str, reason: &str, contributor: &str) -> Result<u64, AtlasError> {
        let old = self.records.get(id).ok_or_else(|| AtlasError::UnknownRecord(id.to_string()))?;
        let change = Change::new(id, WHOLE_RECORD, &old.canonical_name, "", reason).by(contributor);
        let seq = self.log(change)?;
        self.records.remove(id);
        Ok(seq)
    }

    // ---- derived fields -----------------------------------------------

    /// Region implied by a country label, if the tables know it.
    fn region_for(&self, country: &str) -> Option<String> {
        let label = normalize_country(country, &self.tables.aliases).label;
        map_region(&label, &self.tables.regions).ok().map(|r| r.token().to_string())
    }

    /// Fill a blank region from the country before validation.
    pub(crate) fn prefill(&self, raw: &mut RawRecord) {
        let blank = raw.get("region").is_none_or(|r| r.trim().is_empty());
        if blank {
            if let Some(region) = raw.get("country").and_then(|c| self.region_for(c)) {
                raw.insert("region".into(), region);
            }
        }
    }

    /// Apply one field edit with its cascades and return the logged
    /// sequence numbers. `id` and `dedup_key` cannot be edited.
    pub fn edit_field(
        &mut self,
        id: &str,
        field: &str,
        value: &str,
        reason: &str,
        contributor: &str,
    ) -> Result<Vec<u64>, AtlasError> {
        require_reason(reason)?;
        let field = column(field).ok_or_else(|| AtlasError::UnknownField(field.to_string()))?;
        if matches!(field, "id" | "dedup_key") {
            return Err(AtlasError::ProtectedField(field.to_string()));
        }
        let current = self.records.get(id).ok_or_else(|| AtlasError::UnknownRecord(id.to_string()))?;
        let mut raw = current.to_raw();
        let mut value = value.trim().to_string();
        if field == "country" {
            value = normalize_country(&value, &self.tables.aliases).label;
            if let Some(region) = self.region_for(&value) {
                raw.insert("region".into(), region);
            }
        }
        raw.insert(field.to_string(), value);
        let mut next = validate_record(&raw).map_err(AtlasError::ValidationFailure)?;
        if matches!(field, "country" | "city" | "suppress_locality") {
            next.anchor = resolve_record(&next, &self.tables.gazetteer).anchor;
        }
        mvpd_check(&mut next);
        self.replace_record(next, reason, contributor, false)
    }

    // ---- pipeline -----------------------------------------------------

    /// Validate and load CSV rows. Nothing is written unless every row
    /// passes. Rows with an `id` update that record; rows without one are
    /// added under a fresh id.
    pub fn import_rows(&mut self, rows: &[CsvRow], reason: &str, contributor: &str) -> Result<ImportSummary, AtlasError> {
        require_reason(reason)?;
        let mut parsed = Vec::new();
        let mut bad = Vec::new();
        for row in rows {
            let mut raw = row.raw.clone();
            self.prefill(&mut raw);
            let has_id = raw.get("id").is_some_and(|v| !v.trim().is_empty());
            match validate_record(&raw) {
                Ok(mut r) => {
                    mvpd_check(&mut r);
                    parsed.push((has_id, r));
                }
                Err(errors) => bad.push(RowError { line: row.line, errors }),
            }
        }
        if !bad.is_empty() {
            return Err(AtlasError::Rows(bad));
        }
        let mut summary = ImportSummary::default();
        for (has_id, r) in parsed {
            if !has_id {
                summary.added.push(self.insert_new(r, reason, contributor)?.0);
            } else if let Some(old) = self.records.get(&r.id) {
                if *old == r {
                    summary.unchanged += 1;
                } else {
                    summary.updated.push(r.id.clone());
                    self.replace_record(r, reason, contributor, false)?;
                }
            } else {
                summary.added.push(self.insert_with_id(r, reason, contributor)?.0);
            }
        }
        Ok(summary)
    }

    /// Normalize countries, remap regions and merge records sharing a dedup key.
    pub fn harmonize(&mut self, reason: &str, contributor: &str) -> Result<HarmonizeReport, AtlasError> {
        require_reason(reason)?;
        let mut report = HarmonizeReport::default();
        let mut next = Vec::with_capacity(self.records.len());
        for r in self.records.values() {
            let mut r = r.clone();
            let label = normalize_country(&r.country, &self.tables.aliases);
            if let Some(w) = label.warning {
                report.warnings.push((r.id.clone(), w));
            }
            if label.label != r.country {
                r.country = label.label;
                report.countries_normalized += 1;
            }
            if let Ok(region) = map_region(&r.country, &self.tables.regions) {
                if region != r.region {
                    r.region = region;
                    report.regions_remapped += 1;
                }
            }
            next.push(r);
        }
        let (merged, merges) = dedupe(next);
        for entry in &merges {
            for absorbed in &entry.absorbed_ids {
                let why = format!("{reason} (merged into {})", entry.survivor_id);
                self.remove_record(absorbed, &why, contributor)?;
            }
        }
        for r in merged {
            if self.records.get(&r.id) != Some(&r) {
                self.replace_record(r, reason, contributor, false)?;
            }
        }
        report.merges = merges;
        Ok(report)
    }

    /// Resolve every record's anchor against the gazetteer.
    pub fn geocode_all(&mut self, reason: &str, contributor: &str) -> Result<GeocodeReport, AtlasError> {
        require_reason(reason)?;
        let mut report = GeocodeReport::default();
        let mut changed = Vec::new();
        for r in self.records.values() {
            let res = resolve_record(r, &self.tables.gazetteer);
            if let Some(w) = res.warning {
                report.warnings.push((r.id.clone(), w));
            }
            if res.anchor.is_geocoded() {
                report.geocoded += 1;
            } else {
                report.ungeocoded += 1;
            }
            if res.anchor != r.anchor {
                changed.push(ProjectRecord { anchor: res.anchor, ..r.clone() });
            }
        }
        report.changed = changed.len();
        for r in changed {
            self.replace_record(r, reason, contributor, false)?;
        }
        Ok(report)
    }

    /// Re-check every record. Empty when the working set is releasable.
    pub fn validate_all(&self) -> Vec<(String, ValidationErrors)> {
        self.records
            .values()
            .filter_map(|r| validate_record(&r.to_raw()).err().map(|e| (r.id.clone(), e)))
            .collect()
    }

    // ---- views --------------------------------------------------------

    pub fn metrics(&self) -> MetricsReport {
        let records: Vec<ProjectRecord> = self.records.values().cloned().collect();
        let red = &self.governance.redactions;
        metrics_report(&records, |r| red.is_redacted(&r.id, "provenance_url"))
    }

    pub fn public_view(&self, record: &ProjectRecord) -> Map<String, Value> {
        public_json(record, &self.governance.redactions)
    }

    pub fn restricted_view(&self, record: &ProjectRecord) -> Map<String, Value> {
        restricted_json(record)
    }

    pub fn public_history(&self, id: &str) -> Vec<ChangeLogEntry> {
        self.changelog
            .for_record(id)
            .map(|e| public_changelog_entry(e, &self.governance.redactions))
            .collect()
    }

    pub fn public_changelog(&self) -> Vec<ChangeLogEntry> {
        self.changelog
            .entries()
            .iter()
            .map(|e| public_changelog_entry(e, &self.governance.redactions))
            .collect()
    }

    pub fn public_geojson(&self) -> Value {
        let views: Vec<_> = self.records.values().map(|r| self.public_view(r)).collect();
        geojson_from_views(&views)
    }

    /// Serialized working set. Public exports mask redacted fields;
    /// restricted exports carry original values.
    pub fn export(&self, format: ExportFormat, restricted: bool) -> Vec<u8> {
        match (format, restricted) {
            (ExportFormat::Csv, true) => export_csv(self.records.values()),
            (ExportFormat::Csv, false) => write_table(
                COLUMNS,
                self.records.values().map(|r| public_row(r, &self.governance.redactions)),
            ),
            (ExportFormat::Json, _) => {
                let views: Vec<Value> = self
                    .records
                    .values()
                    .map(|r| Value::Object(if restricted { self.restricted_view(r) } else { self.public_view(r) }))
                    .collect();
                pretty(&views)
            }
            (ExportFormat::GeoJson, true) => pretty(&crate::projection::export_geojson(self.records.values())),
            (ExportFormat::GeoJson, false) => pretty(&self.public_geojson()),
        }
    }

    // ---- releases -----------------------------------------------------

    /// Publish the working set as an immutable release.
    pub fn cut_release(&mut self, store: &ReleaseStore, version: &str) -> Result<ReleaseManifest, AtlasError> {
        let version: ReleaseVersion = version.parse().map_err(ReleaseError::from)?;
        if store.exists(&version) {
            return Err(ReleaseError::DuplicateVersion(version).into());
        }
        let invalid = self.validate_all();
        if !invalid.is_empty() {
            return Err(ReleaseError::ValidationFailure(invalid).into());
        }
        let geojson = self.public_geojson();
        let geocoded_count = geojson["features"].as_array().map_or(0, Vec::len);
        let public: Vec<(String, Vec<u8>)> = vec![
            (RECORDS_CSV.into(), self.export(ExportFormat::Csv, false)),
            (RECORDS_JSON.into(), self.export(ExportFormat::Json, false)),
            (RECORDS_GEOJSON.into(), pretty(&geojson)),
            (METRICS_JSON.into(), self.metrics().to_json().into_bytes()),
            (CHANGELOG_JSON.into(), pretty(&self.public_changelog())),
        ];
        debug_assert!(public.iter().map(|(n, _)| n.as_str()).eq(ARTIFACT_NAMES.iter().copied()));
        let restricted = vec![
            (RECORDS_CSV.into(), self.export(ExportFormat::Csv, true)),
            (CHANGELOG_JSON.into(), pretty(&self.changelog)),
            (GOVERNANCE_JSON.into(), pretty(&self.governance)),
        ];
        let last = self.changelog.last_sequence();
        let manifest = ReleaseManifest {
            version,
            schema_version: self.schema_version,
            created_at: self.now(),
            record_count: self.records.len(),
            geocoded_count,
            artifacts: public.iter().map(|(n, b)| artifact_entry(n, b)).collect(),
            changelog_range: ChangelogRange { first: self.last_released_sequence + 1, last },
            release_notes: self.pending_release_notes.clone(),
        };
        store.publish(&manifest, &ArtifactSet { public, restricted })?;
        self.last_released_sequence = last;
        self.pending_release_notes.clear();
        Ok(manifest)
    }

    // ---- persistence --------------------------------------------------

    pub fn release_store(data_dir: &Path) -> Result<ReleaseStore, AtlasError> {
        Ok(ReleaseStore::open(data_dir.join(RELEASES_DIR))?)
    }

    /// Load the working set from `<data_dir>/working/`, or start empty.
    pub fn load(data_dir: &Path, tables: Arc<Tables>, clock: Clock) -> Result<Self, AtlasError> {
        let mut atlas = Atlas::new(tables, clock);
        let dir = data_dir.join(WORKING_DIR);
        let records_path = dir.join(RECORDS_CSV);
        if records_path.is_file() {
            let bytes = fs::read(&records_path)?;
            let records = import_csv(&bytes)?.map_err(AtlasError::Rows)?;
            atlas.records = records.into_iter().map(|r| (r.id.clone(), r)).collect();
        }
        if let Some(log) = read_json(&dir.join(CHANGELOG_JSON))? {
            atlas.changelog = log;
        }
        if let Some(g) = read_json(&dir.join(GOVERNANCE_JSON))? {
            atlas.governance = g;
        }
        if let Some(state) = read_json::<AtlasState>(&dir.join(STATE_JSON))? {
            atlas.schema_version = state.schema_version.max(1);
            atlas.pending_release_notes = state.pending_release_notes;
            atlas.last_released_sequence = state.last_released_sequence;
        }
        Ok(atlas)
    }

    /// Write the working set. Each file is replaced atomically.
    pub fn save(&self, data_dir: &Path) -> Result<(), AtlasError> {
        let dir = data_dir.join(WORKING_DIR);
        fs::create_dir_all(&dir)?;
        let state = AtlasState {
            schema_version: self.schema_version,
            pending_release_notes: self.pending_release_notes.clone(),
            last_released_sequence: self.last_released_sequence,
        };
        write_atomic(&dir.join(RECORDS_CSV), &export_csv(self.records.values()))?;
        write_atomic(&dir.join(CHANGELOG_JSON), &pretty(&self.changelog))?;
        write_atomic(&dir.join(GOVERNANCE_JSON), &pretty(&self.governance))?;
        write_atomic(&dir.join(STATE_JSON), &pretty(&state))?;
        Ok(())
    }
}

fn pretty<T: Serialize + ?Sized>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("value serializes");
    out.push(b'\n');
    out
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>, AtlasError> {
    if !path.is_file() {
        return Ok(None);
    }
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes)
        .map(Some)
        .map_err(|source| AtlasError::Json { path: path.display().to_string(), source })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

/// Reject edits of fields that must stay public.
pub(crate) fn check_redactable(field: &str) -> Result<&'static str, AtlasError> {
    let col = column(field).ok_or_else(|| AtlasError::UnknownField(field.to_string()))?;
    if PROTECTED_FIELDS.contains(&col) {
        return Err(AtlasError::ProtectedField(col.to_string()));
    }
    Ok(col)
}
