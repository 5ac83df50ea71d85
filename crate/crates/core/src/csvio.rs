//! CSV reading and writing in the canonical column layout.
//!
//! Files are UTF-8 with a mandatory header row and RFC 4180 quoting.
//! Headers are matched case-insensitively after mapping spaces and hyphens
//! to underscores, and common alternative names are accepted through
//! [`HeaderAliases`].

use std::collections::BTreeMap;
use std::io::Read;

use crate::record::{column, validate_record, ProjectRecord, RawRecord, ValidationErrors, COLUMNS};

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header row has no recognised columns")]
    MissingHeader,
    #[error("column {0:?} appears twice in the header")]
    DuplicateColumn(String),
}

/// Alternative header spellings mapped onto canonical columns.
#[derive(Debug, Clone)]
pub struct HeaderAliases {
    map: BTreeMap<String, &'static str>,
}

fn header_key(raw: &str) -> String {
    raw.trim()
        .trim_start_matches('\u{feff}')
        .to_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

impl Default for HeaderAliases {
    fn default() -> Self {
        let mut a = HeaderAliases { map: BTreeMap::new() };
        for (alias, canonical) in [
            ("name", "canonical_name"),
            ("project_name", "canonical_name"),
            ("project", "canonical_name"),
            ("provenance", "provenance_url"),
            ("source_url", "provenance_url"),
            ("source_url_1", "provenance_url"),
            ("primary_provenance_url", "provenance_url"),
            ("second_source", "source_url_2"),
            ("third_source", "source_url_3"),
            ("url", "official_url"),
            ("website", "official_url"),
            ("official_project_url", "official_url"),
            ("locality", "city"),
            ("lead_org", "lead_organization"),
            ("org_type", "organization_type"),
            ("partners", "partner_organizations"),
            ("status", "activity_status"),
            ("domain", "application_domain"),
            ("modality", "ai_modality"),
            ("tier", "participation_tier"),
            ("participation_mode", "participation_tier"),
            ("methods", "participation_methods"),
            ("stages", "lifecycle_stages"),
            ("lifecycle", "lifecycle_stages"),
            ("ai_lifecycle_stages", "lifecycle_stages"),
            ("decisions", "decision_points"),
            ("notes", "evidence_notes"),
            ("verification", "verification_status"),
            ("grade", "evidence_grade"),
            ("review", "review_status"),
            ("lat", "latitude"),
            ("lon", "longitude"),
            ("lng", "longitude"),
            ("geo_precision", "precision"),
        ] {
            a.add(alias, canonical);
        }
        a
    }
}

impl HeaderAliases {
    /// Register an alias. Returns false when `canonical` is not a column.
    pub fn add(&mut self, alias: &str, canonical: &str) -> bool {
        match column(canonical) {
            Some(c) => {
                self.map.insert(header_key(alias), c);
                true
            }
            None => false,
        }
    }

    pub fn resolve(&self, header: &str) -> Option<&'static str> {
        let key = header_key(header);
        column(&key).or_else(|| self.map.get(&key).copied())
    }
}

/// A data row and the 1-based line it started on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvRow {
    pub line: u64,
    pub raw: RawRecord,
}

#[derive(Debug, Clone, Default)]
pub struct CsvRows {
    pub rows: Vec<CsvRow>,
    /// Header cells that matched no column; their data is ignored.
    pub ignored_headers: Vec<String>,
}

pub fn read_rows(reader: impl Read, aliases: &HeaderAliases) -> Result<CsvRows, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut mapping: Vec<Option<&'static str>> = Vec::with_capacity(headers.len());
    let mut ignored = Vec::new();
    for h in headers.iter() {
        let resolved = aliases.resolve(h);
        if let Some(c) = resolved {
            if mapping.contains(&Some(c)) {
                return Err(CsvError::DuplicateColumn(c.to_string()));
            }
        } else {
            ignored.push(h.to_string());
        }
        mapping.push(resolved);
    }
    if mapping.iter().all(Option::is_none) {
        return Err(CsvError::MissingHeader);
    }
    let mut rows = Vec::new();
    for result in rdr.records() {
        let rec = result?;
        let line = rec.position().map_or(0, |p| p.line());
        let raw: RawRecord = mapping
            .iter()
            .zip(rec.iter())
            .filter_map(|(col, cell)| col.map(|c| (c.to_string(), cell.to_string())))
            .collect();
        rows.push(CsvRow { line, raw });
    }
    Ok(CsvRows { rows, ignored_headers: ignored })
}

/// A row that failed validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub errors: ValidationErrors,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.errors)
    }
}

/// Validate every row, collecting all failures.
pub fn validate_rows(rows: &[CsvRow]) -> Result<Vec<ProjectRecord>, Vec<RowError>> {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for row in rows {
        match validate_record(&row.raw) {
            Ok(r) => ok.push(r),
            Err(errors) => bad.push(RowError { line: row.line, errors }),
        }
    }
    if bad.is_empty() {
        Ok(ok)
    } else {
        Err(bad)
    }
}

/// Write a header and string rows as CSV bytes.
pub fn write_table<I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Canonical CSV for a record set.
pub fn export_csv<'a>(records: impl IntoIterator<Item = &'a ProjectRecord>) -> Vec<u8> {
    write_table(COLUMNS, records.into_iter().map(ProjectRecord::to_row))
}

/// Parse canonical CSV back into records.
pub fn import_csv(bytes: &[u8]) -> Result<Result<Vec<ProjectRecord>, Vec<RowError>>, CsvError> {
    let rows = read_rows(bytes, &HeaderAliases::default())?;
    Ok(validate_rows(&rows.rows))
}

/// Read a CSV as a list of id-keyed string maps without validation.
pub fn read_table(bytes: &[u8]) -> Result<BTreeMap<String, BTreeMap<String, String>>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut out = BTreeMap::new();
    for result in rdr.records() {
        let rec = result?;
        let row: BTreeMap<String, String> = headers
            .iter()
            .cloned()
            .zip(rec.iter().map(str::to_string))
            .collect();
        let id = row.get("id").cloned().unwrap_or_default();
        out.insert(id, row);
    }
    Ok(out)
}
