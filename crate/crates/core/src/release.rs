//! Immutable release snapshots.
//!
//! A release lives in `<root>/<version>/` and holds the five public
//! artifacts plus `manifest.json`. Publishing writes into a temporary
//! directory and renames it into place, so a version directory is either
//! complete or absent. Files are marked read-only after writing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::changelog::{utc_z, ChangeLogEntry, WHOLE_RECORD};
use crate::csvio::{read_table, CsvError};
use crate::record::ValidationErrors;

pub const RECORDS_CSV: &str = "records.csv";
pub const RECORDS_JSON: &str = "records.json";
pub const RECORDS_GEOJSON: &str = "records.geojson";
pub const METRICS_JSON: &str = "metrics.json";
pub const CHANGELOG_JSON: &str = "changelog.json";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Public artifacts every release carries, in manifest order.
pub const ARTIFACT_NAMES: &[&str] = &[RECORDS_CSV, RECORDS_JSON, RECORDS_GEOJSON, METRICS_JSON, CHANGELOG_JSON];

const RESTRICTED_DIR: &str = "restricted";

/// `vYYYY.MM` with an optional `.patch`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReleaseVersion {
    pub year: u16,
    pub month: u8,
    pub patch: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid release version {0:?}: expected vYYYY.MM or vYYYY.MM.patch")]
pub struct InvalidVersion(pub String);

impl FromStr for ReleaseVersion {
    type Err = InvalidVersion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidVersion(s.to_string());
        let rest = s.strip_prefix('v').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split('.').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(bad());
        }
        let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
        if parts[0].len() != 4 || parts[1].len() != 2 || !parts.iter().all(|p| digits(p)) {
            return Err(bad());
        }
        let year: u16 = parts[0].parse().map_err(|_| bad())?;
        let month: u8 = parts[1].parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        let patch = match parts.get(2) {
            Some(p) if p.len() > 1 && p.starts_with('0') => return Err(bad()),
            Some(p) => Some(p.parse().map_err(|_| bad())?),
            None => None,
        };
        Ok(ReleaseVersion { year, month, patch })
    }
}

impl fmt::Display for ReleaseVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{:04}.{:02}", self.year, self.month)?;
        if let Some(p) = self.patch {
            write!(f, ".{p}")?;
        }
        Ok(())
    }
}

impl Serialize for ReleaseVersion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ReleaseVersion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Inclusive change-log sequence range. Empty when `first > last`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangelogRange {
    pub first: u64,
    pub last: u64,
}

impl ChangelogRange {
    pub fn contains(&self, sequence: u64) -> bool {
        sequence >= self.first && sequence <= self.last
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseManifest {
    pub version: ReleaseVersion,
    pub schema_version: u32,
    #[serde(with = "utc_z")]
    pub created_at: DateTime<Utc>,
    pub record_count: usize,
    pub geocoded_count: usize,
    pub artifacts: Vec<ArtifactEntry>,
    pub changelog_range: ChangelogRange,
    #[serde(default)]
    pub release_notes: Vec<String>,
}

impl ReleaseManifest {
    pub fn artifact(&self, name: &str) -> Option<&ArtifactEntry> {
        self.artifacts.iter().find(|a| a.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReleaseError {
    #[error("release {0} already exists")]
    DuplicateVersion(ReleaseVersion),
    #[error("release {0} not found")]
    UnknownRelease(ReleaseVersion),
    #[error("release {version} is missing artifact {name}")]
    MissingArtifact { version: ReleaseVersion, name: String },
    #[error("artifact {name} in release {version} does not match its manifest digest")]
    DigestMismatch { version: ReleaseVersion, name: String },
    #[error("release refused: {} invalid record(s)", .0.len())]
    ValidationFailure(Vec<(String, ValidationErrors)>),
    #[error(transparent)]
    InvalidVersion(#[from] InvalidVersion),
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn artifact_entry(name: &str, bytes: &[u8]) -> ArtifactEntry {
    ArtifactEntry {
        name: name.to_string(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(bytes),
    }
}

/// Named artifact contents ready to publish.
#[derive(Debug, Clone, Default)]
pub struct ArtifactSet {
    pub public: Vec<(String, Vec<u8>)>,
    /// Curator-only files stored beside the release but never listed in
    /// the manifest or served publicly.
    pub restricted: Vec<(String, Vec<u8>)>,
}

/// Published releases under one directory.
#[derive(Debug, Clone)]
pub struct ReleaseStore {
    root: PathBuf,
}

impl ReleaseStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ReleaseError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(ReleaseStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, v: &ReleaseVersion) -> PathBuf {
        self.root.join(v.to_string())
    }

    pub fn exists(&self, v: &ReleaseVersion) -> bool {
        self.dir(v).join(MANIFEST_JSON).is_file()
    }

    /// Published versions in ascending order.
    pub fn list(&self) -> Result<Vec<ReleaseVersion>, ReleaseError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            let Some(name) = entry.file_name().to_str().map(str::to_string) else {
                continue;
            };
            if let Ok(v) = name.parse::<ReleaseVersion>() {
                if self.exists(&v) {
                    out.push(v);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn latest(&self) -> Result<Option<ReleaseVersion>, ReleaseError> {
        Ok(self.list()?.pop())
    }

    /// Write a release. The manifest's artifact list must match `artifacts.public`.
    pub fn publish(&self, manifest: &ReleaseManifest, artifacts: &ArtifactSet) -> Result<(), ReleaseError> {
        let v = manifest.version;
        let target = self.dir(&v);
        if target.exists() {
            return Err(ReleaseError::DuplicateVersion(v));
        }
        for (name, bytes) in &artifacts.public {
            match manifest.artifact(name) {
                Some(a) if *a == artifact_entry(name, bytes) => {}
                Some(_) => return Err(ReleaseError::DigestMismatch { version: v, name: name.clone() }),
                None => return Err(ReleaseError::MissingArtifact { version: v, name: name.clone() }),
            }
        }
        let tmp = self.root.join(format!(".staging-{v}"));
        if tmp.exists() {
            make_writable(&tmp)?;
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(tmp.join(RESTRICTED_DIR))?;
        for (name, bytes) in &artifacts.public {
            write_read_only(&tmp.join(name), bytes)?;
        }
        for (name, bytes) in &artifacts.restricted {
            write_read_only(&tmp.join(RESTRICTED_DIR).join(name), bytes)?;
        }
        write_read_only(&tmp.join(MANIFEST_JSON), manifest.to_json().as_bytes())?;
        fs::rename(&tmp, &target)?;
        Ok(())
    }

    pub fn manifest(&self, v: &ReleaseVersion) -> Result<ReleaseManifest, ReleaseError> {
        let path = self.dir(v).join(MANIFEST_JSON);
        if !path.is_file() {
            return Err(ReleaseError::UnknownRelease(*v));
        }
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    /// Artifact bytes, checked against the manifest digest.
    pub fn artifact(&self, v: &ReleaseVersion, name: &str) -> Result<Vec<u8>, ReleaseError> {
        let manifest = self.manifest(v)?;
        let missing = || ReleaseError::MissingArtifact { version: *v, name: name.to_string() };
        let entry = manifest.artifact(name).ok_or_else(missing)?;
        let bytes = fs::read(self.dir(v).join(name)).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => missing(),
            _ => ReleaseError::Io(e),
        })?;
        if bytes.len() as u64 != entry.bytes || sha256_hex(&bytes) != entry.sha256 {
            return Err(ReleaseError::DigestMismatch { version: *v, name: name.to_string() });
        }
        Ok(bytes)
    }

    pub fn restricted_artifact(&self, v: &ReleaseVersion, name: &str) -> Result<Vec<u8>, ReleaseError> {
        if !self.exists(v) {
            return Err(ReleaseError::UnknownRelease(*v));
        }
        fs::read(self.dir(v).join(RESTRICTED_DIR).join(name)).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ReleaseError::MissingArtifact { version: *v, name: name.to_string() },
            _ => ReleaseError::Io(e),
        })
    }

    /// Re-hash every listed artifact.
    pub fn verify(&self, v: &ReleaseVersion) -> Result<ReleaseManifest, ReleaseError> {
        let manifest = self.manifest(v)?;
        for a in &manifest.artifacts {
            self.artifact(v, &a.name)?;
        }
        Ok(manifest)
    }
}

fn write_read_only(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    fs::write(path, bytes)?;
    let mut perms = fs::metadata(path)?.permissions();
    perms.set_readonly(true);
    fs::set_permissions(path, perms)
}

#[allow(clippy::permissions_set_readonly_false)]
fn make_writable(dir: &Path) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            make_writable(&path)?;
        } else {
            let mut perms = fs::metadata(&path)?.permissions();
            perms.set_readonly(false);
            fs::set_permissions(&path, perms)?;
        }
    }
    Ok(())
}

/// Record-level differences between two snapshots.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReleaseDiff {
    pub added: BTreeSet<String>,
    pub removed: BTreeSet<String>,
    pub modified: BTreeSet<(String, String)>,
}

impl ReleaseDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.modified.is_empty()
    }
}

/// Compare two `records.csv` artifacts by id and column.
pub fn diff_tables(a: &[u8], b: &[u8]) -> Result<ReleaseDiff, CsvError> {
    let ta = read_table(a)?;
    let tb = read_table(b)?;
    Ok(diff_maps(&ta, &tb))
}

fn diff_maps(
    a: &BTreeMap<String, BTreeMap<String, String>>,
    b: &BTreeMap<String, BTreeMap<String, String>>,
) -> ReleaseDiff {
    let mut diff = ReleaseDiff::default();
    for (id, row_b) in b {
        match a.get(id) {
            None => {
                diff.added.insert(id.clone());
            }
            Some(row_a) => {
                let columns: BTreeSet<&String> = row_a.keys().chain(row_b.keys()).collect();
                for c in columns {
                    if row_a.get(c) != row_b.get(c) {
                        diff.modified.insert((id.clone(), c.clone()));
                    }
                }
            }
        }
    }
    diff.removed = a.keys().filter(|id| !b.contains_key(*id)).cloned().collect();
    diff
}

/// Diff two published releases, verifying both CSV artifacts first.
pub fn diff_releases(store: &ReleaseStore, a: &ReleaseVersion, b: &ReleaseVersion) -> Result<ReleaseDiff, ReleaseError> {
    let csv_a = store.artifact(a, RECORDS_CSV)?;
    let csv_b = store.artifact(b, RECORDS_CSV)?;
    Ok(diff_tables(&csv_a, &csv_b)?)
}

/// One difference not explained by any change-log entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Uncovered {
    Added { id: String },
    Removed { id: String },
    Modified { id: String, field: String },
}

/// Differences with no matching entry. Additions and removals are covered
/// by a whole-record entry for the id; field changes by an entry for that
/// exact field or a whole-record entry.
pub fn uncovered_changes<'a>(diff: &ReleaseDiff, entries: impl IntoIterator<Item = &'a ChangeLogEntry>) -> Vec<Uncovered> {
    let mut whole = BTreeSet::new();
    let mut fields = BTreeSet::new();
    for e in entries {
        if e.field == WHOLE_RECORD {
            whole.insert(e.record_id.as_str());
        } else {
            fields.insert((e.record_id.as_str(), e.field.as_str()));
        }
    }
    let mut out = Vec::new();
    for id in &diff.added {
        if !whole.contains(id.as_str()) {
            out.push(Uncovered::Added { id: id.clone() });
        }
    }
    for id in &diff.removed {
        if !whole.contains(id.as_str()) {
            out.push(Uncovered::Removed { id: id.clone() });
        }
    }
    for (id, field) in &diff.modified {
        if !whole.contains(id.as_str()) && !fields.contains(&(id.as_str(), field.as_str())) {
            out.push(Uncovered::Modified { id: id.clone(), field: field.clone() });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn v(s: &str) -> ReleaseVersion {
        s.parse().unwrap()
    }

    #[test]
    fn version_format() {
        assert_eq!(v("v2026.03").to_string(), "v2026.03");
        assert_eq!(v("v2026.03.2").patch, Some(2));
        for bad in ["2026.03", "v2026.3", "v2026.13", "v2026.00", "v26.03", "v2026.03.", "v2026.03.01", "v2026.03.1.1"] {
            assert!(bad.parse::<ReleaseVersion>().is_err(), "{bad}");
        }
        assert!(v("v2026.03") < v("v2026.03.1"));
        assert!(v("v2026.03.9") < v("v2026.04"));
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    fn manifest_for(version: &str, files: &[(String, Vec<u8>)]) -> ReleaseManifest {
        ReleaseManifest {
            version: v(version),
            schema_version: 1,
            created_at: Utc.with_ymd_and_hms(2026, 3, 1, 0, 0, 0).unwrap(),
            record_count: 0,
            geocoded_count: 0,
            artifacts: files.iter().map(|(n, b)| artifact_entry(n, b)).collect(),
            changelog_range: ChangelogRange { first: 1, last: 0 },
            release_notes: vec![],
        }
    }

    #[test]
    fn publish_verify_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReleaseStore::open(dir.path()).unwrap();
        let files = vec![(RECORDS_CSV.to_string(), b"id\r\n".to_vec())];
        let m = manifest_for("v2026.03", &files);
        let set = ArtifactSet { public: files.clone(), restricted: vec![] };
        store.publish(&m, &set).unwrap();
        assert_eq!(store.verify(&m.version).unwrap(), m);
        assert!(matches!(store.publish(&m, &set), Err(ReleaseError::DuplicateVersion(_))));
        assert_eq!(store.list().unwrap(), vec![m.version]);

        let path = dir.path().join("v2026.03").join(RECORDS_CSV);
        let mut perms = fs::metadata(&path).unwrap().permissions();
        assert!(perms.readonly());
        #[allow(clippy::permissions_set_readonly_false)]
        perms.set_readonly(false);
        fs::set_permissions(&path, perms).unwrap();
        fs::write(&path, b"id\r\nx-0001\r\n").unwrap();
        assert!(matches!(store.verify(&m.version), Err(ReleaseError::DigestMismatch { .. })));
        fs::remove_file(&path).unwrap();
        assert!(matches!(store.verify(&m.version), Err(ReleaseError::MissingArtifact { .. })));
        assert!(matches!(store.manifest(&v("v2027.01")), Err(ReleaseError::UnknownRelease(_))));
    }

    #[test]
    fn table_diff() {
        let a = b"id,city,country\r\na-0001,Paris,France\r\nb-0001,,Kenya\r\n";
        let b = b"id,city,country\r\na-0001,Lyon,France\r\nc-0001,,Chile\r\n";
        let d = diff_tables(a, b).unwrap();
        assert_eq!(d.added, BTreeSet::from(["c-0001".to_string()]));
        assert_eq!(d.removed, BTreeSet::from(["b-0001".to_string()]));
        assert_eq!(d.modified, BTreeSet::from([("a-0001".to_string(), "city".to_string())]));
        assert!(diff_tables(a, a).unwrap().is_empty());
    }
}
