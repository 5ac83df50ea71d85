//! Name and country normalization, region mapping and key-based deduplication.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::record::ProjectRecord;
use crate::schema::Region;

/// Country-slot sentinel for records without a single country.
pub const GLOBAL: &str = "Global";
/// Country-slot sentinel for records spanning several countries.
pub const MULTI_COUNTRY: &str = "Multi-country";

const BUILTIN_ALIASES: &str = include_str!("../data/country_aliases.tsv");
const BUILTIN_REGIONS: &str = include_str!("../data/regions.tsv");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HarmonizeError {
    #[error("name {0:?} has no letters or digits")]
    EmptyAfterNormalization(String),
    #[error("country {0:?} has no region mapping")]
    UnmappedCountry(String),
    #[error("{file} line {line}: {message}")]
    Table { file: &'static str, line: usize, message: String },
}

/// Non-fatal issue raised during harmonization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HarmonizeWarning {
    UnknownCountry { value: String },
}

/// Dedup key for a display name.
///
/// Compatibility-normalizes (NFKC), lowercases, turns every run of
/// non-alphanumeric characters (whitespace, hyphens, dashes, colons, commas,
/// periods, quotes, ...) into a single space and trims the ends.
pub fn normalize_name(raw: &str) -> Result<String, HarmonizeError> {
    let folded: String = raw
        .nfkc()
        .flat_map(char::to_lowercase)
        .collect::<String>()
        .nfkc()
        .collect();
    let mut out = String::with_capacity(folded.len());
    let mut gap = false;
    for c in folded.chars() {
        if c.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push(' ');
            }
            gap = false;
            out.push(c);
        } else {
            gap = true;
        }
    }
    if out.is_empty() {
        Err(HarmonizeError::EmptyAfterNormalization(raw.to_string()))
    } else {
        Ok(out)
    }
}

fn table_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            None
        } else {
            Some((i + 1, line.split('\t').map(str::trim).collect()))
        }
    })
}

/// Alias string to canonical country label.
#[derive(Debug, Clone, Default)]
pub struct CountryAliasTable {
    by_key: HashMap<String, String>,
    canonicals: BTreeSet<String>,
}

impl CountryAliasTable {
    pub fn builtin() -> Self {
        Self::from_tsv(BUILTIN_ALIASES).expect("bundled alias table is valid")
    }

    /// Parse `alias<TAB>canonical` rows. Canonical labels are added as
    /// their own aliases; an alias may not point at two canonicals.
    pub fn from_tsv(text: &str) -> Result<Self, HarmonizeError> {
        let err = |line, message: String| HarmonizeError::Table { file: "aliases", line, message };
        let mut table = CountryAliasTable::default();
        table.insert(GLOBAL, GLOBAL).expect("empty table");
        table.insert(MULTI_COUNTRY, MULTI_COUNTRY).expect("empty table");
        for (line, cols) in table_rows(text) {
            let [alias, canonical] = cols[..] else {
                return Err(err(line, format!("expected 2 columns, found {}", cols.len())));
            };
            table.insert(canonical, canonical).map_err(|m| err(line, m))?;
            table.insert(alias, canonical).map_err(|m| err(line, m))?;
        }
        Ok(table)
    }

    fn insert(&mut self, alias: &str, canonical: &str) -> Result<(), String> {
        let key = normalize_name(alias).map_err(|e| e.to_string())?;
        match self.by_key.get(&key) {
            Some(existing) if existing != canonical => {
                Err(format!("alias {alias:?} maps to both {existing:?} and {canonical:?}"))
            }
            _ => {
                self.by_key.insert(key, canonical.to_string());
                self.canonicals.insert(canonical.to_string());
                Ok(())
            }
        }
    }

    pub fn lookup(&self, raw: &str) -> Option<&str> {
        let key = normalize_name(raw).ok()?;
        self.by_key.get(&key).map(String::as_str)
    }

    /// Every canonical label, sentinels included.
    pub fn canonicals(&self) -> impl Iterator<Item = &str> {
        self.canonicals.iter().map(String::as_str)
    }
}

/// Result of country normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountryLabel {
    pub label: String,
    pub warning: Option<HarmonizeWarning>,
}

/// Canonical label for a country spelling. Unknown values come back
/// trimmed but otherwise verbatim, with an `UnknownCountry` warning.
pub fn normalize_country(raw: &str, table: &CountryAliasTable) -> CountryLabel {
    match table.lookup(raw) {
        Some(label) => CountryLabel { label: label.to_string(), warning: None },
        None => CountryLabel {
            label: raw.trim().to_string(),
            warning: Some(HarmonizeWarning::UnknownCountry { value: raw.trim().to_string() }),
        },
    }
}

/// Canonical country label to region.
#[derive(Debug, Clone, Default)]
pub struct RegionTable {
    by_key: HashMap<String, Region>,
}

impl RegionTable {
    pub fn builtin() -> Self {
        Self::from_tsv(BUILTIN_REGIONS).expect("bundled region table is valid")
    }

    pub fn from_tsv(text: &str) -> Result<Self, HarmonizeError> {
        let err = |line, message: String| HarmonizeError::Table { file: "regions", line, message };
        let mut by_key = HashMap::new();
        by_key.insert(normalize_name(GLOBAL).expect("sentinel"), Region::Global);
        by_key.insert(normalize_name(MULTI_COUNTRY).expect("sentinel"), Region::MultiRegion);
        for (line, cols) in table_rows(text) {
            let [country, region] = cols[..] else {
                return Err(err(line, format!("expected 2 columns, found {}", cols.len())));
            };
            let region: Region = region.parse().map_err(|e: crate::schema::UnknownVariant| err(line, e.to_string()))?;
            let key = normalize_name(country).map_err(|e| err(line, e.to_string()))?;
            if let Some(prev) = by_key.insert(key, region) {
                if prev != region {
                    return Err(err(line, format!("{country:?} mapped to two regions")));
                }
            }
        }
        Ok(RegionTable { by_key })
    }

    /// Canonical labels of `aliases` that have no region row.
    pub fn unmapped<'a>(&self, aliases: &'a CountryAliasTable) -> Vec<&'a str> {
        aliases
            .canonicals()
            .filter(|c| map_region(c, self).is_err())
            .collect()
    }
}

pub fn map_region(country: &str, table: &RegionTable) -> Result<Region, HarmonizeError> {
    normalize_name(country)
        .ok()
        .and_then(|k| table.by_key.get(&k).copied())
        .ok_or_else(|| HarmonizeError::UnmappedCountry(country.to_string()))
}

/// Whether a country label is one of the two non-country sentinels.
pub fn is_sentinel(country: &str) -> bool {
    match normalize_name(country) {
        Ok(k) => k == "global" || k == "multi country",
        Err(_) => false,
    }
}

/// One collapse performed by [`dedupe`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEntry {
    pub dedup_key: String,
    pub survivor_id: String,
    pub absorbed_ids: Vec<String>,
}

/// Survivor ordering: stronger grade, then earlier start year (absent
/// years last), then lexicographic id.
fn survivor_order(a: &ProjectRecord, b: &ProjectRecord) -> std::cmp::Ordering {
    let year = |r: &ProjectRecord| r.start_year.unwrap_or(i32::MAX);
    b.evidence_grade
        .strength()
        .cmp(&a.evidence_grade.strength())
        .then_with(|| year(a).cmp(&year(b)))
        .then_with(|| a.id.cmp(&b.id))
}

/// Merge records sharing a dedup key into one canonical record.
///
/// Every URL of an absorbed record (provenance, corroborating sources,
/// official site, its own alternate links) is appended to the survivor's
/// `alternate_links`, absorbed records taken in survivor order. Output keeps
/// the position of each key's first occurrence.
pub fn dedupe(records: Vec<ProjectRecord>) -> (Vec<ProjectRecord>, Vec<MergeEntry>) {
    let mut groups: BTreeMap<String, Vec<ProjectRecord>> = BTreeMap::new();
    let mut first_seen: Vec<String> = Vec::new();
    for r in records {
        let key = r.dedup_key.clone();
        let group = groups.entry(key.clone()).or_default();
        if group.is_empty() {
            first_seen.push(key);
        }
        group.push(r);
    }

    let mut out = Vec::with_capacity(first_seen.len());
    let mut report = Vec::new();
    for key in first_seen {
        let mut group = groups.remove(&key).expect("group exists");
        if group.len() == 1 {
            out.extend(group);
            continue;
        }
        group.sort_by(survivor_order);
        let mut iter = group.into_iter();
        let mut survivor = iter.next().expect("non-empty group");
        let mut absorbed_ids = Vec::new();
        for other in iter {
            let links: Vec<String> = other.urls().into_iter().map(str::to_string).collect();
            survivor.alternate_links.extend(links);
            absorbed_ids.push(other.id);
        }
        report.push(MergeEntry {
            dedup_key: key,
            survivor_id: survivor.id.clone(),
            absorbed_ids,
        });
        out.push(survivor);
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::tests::masakhane_row;
    use crate::record::validate_record;
    use crate::schema::Grade;

    #[test]
    fn whitespace_and_case() {
        assert_eq!(normalize_name("  AI  Atlas ").unwrap(), "ai atlas");
        assert_eq!(normalize_name("ai atlas").unwrap(), "ai atlas");
        assert_eq!(normalize_name("AI\tAtlas\n").unwrap(), "ai atlas");
    }

    #[test]
    fn dash_variants_collapse() {
        // Em dash and ASCII hyphen, each surrounded by spaces, are a single
        // separator run and collapse to one space.
        let em = normalize_name("Masakhane \u{2014} NLP").unwrap();
        let hy = normalize_name("Masakhane - NLP").unwrap();
        assert_eq!(em, "masakhane nlp");
        assert_eq!(em, hy);
        assert_eq!(normalize_name("\u{201C}Masakhane\u{201D}: NLP, Inc.").unwrap(), "masakhane nlp inc");
    }

    #[test]
    fn compatibility_forms_fold() {
        // Fullwidth letters and the fi ligature fold under NFKC.
        assert_eq!(normalize_name("\u{FF21}\u{FF29} atlas").unwrap(), "ai atlas");
        assert_eq!(normalize_name("\u{FB01}eld").unwrap(), "field");
        // Precomposed and decomposed accents agree.
        assert_eq!(normalize_name("Me\u{0301}dia").unwrap(), normalize_name("M\u{00E9}dia").unwrap());
    }

    #[test]
    fn symbol_only_input_is_an_error() {
        assert!(matches!(
            normalize_name(" -- !! "),
            Err(HarmonizeError::EmptyAfterNormalization(_))
        ));
        assert!(normalize_name("").is_err());
    }

    #[test]
    fn country_aliases() {
        let t = CountryAliasTable::builtin();
        assert_eq!(normalize_country("UK", &t).label, "United Kingdom");
        assert_eq!(normalize_country("United States", &t).label, "United States");
        assert_eq!(normalize_country("U.S.A.", &t).label, "United States");
        assert_eq!(normalize_country("usa", &t).label, "United States");
        assert_eq!(normalize_country("Worldwide", &t).label, "Global");
        let unknown = normalize_country(" Atlantis ", &t);
        assert_eq!(unknown.label, "Atlantis");
        assert_eq!(
            unknown.warning,
            Some(HarmonizeWarning::UnknownCountry { value: "Atlantis".into() })
        );
    }

    #[test]
    fn canonicals_are_fixed_points() {
        let t = CountryAliasTable::builtin();
        for c in t.canonicals() {
            assert_eq!(normalize_country(c, &t).label, c);
        }
    }

    #[test]
    fn conflicting_alias_is_rejected() {
        let err = CountryAliasTable::from_tsv("UK\tUnited Kingdom\nuk\tUkraine\n").unwrap_err();
        assert!(matches!(err, HarmonizeError::Table { line: 2, .. }), "{err}");
        let err = CountryAliasTable::from_tsv("just one column\n").unwrap_err();
        assert!(matches!(err, HarmonizeError::Table { line: 1, .. }));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let t = CountryAliasTable::from_tsv("# comment\n\nKE\tKenya\n").unwrap();
        assert_eq!(t.lookup("ke"), Some("Kenya"));
    }

    #[test]
    fn regions() {
        let t = RegionTable::builtin();
        assert_eq!(map_region("Kenya", &t).unwrap(), Region::Africa);
        assert_eq!(map_region("Global", &t).unwrap(), Region::Global);
        assert_eq!(map_region("Multi-country", &t).unwrap(), Region::MultiRegion);
        assert_eq!(map_region("Canada", &t).unwrap(), Region::NorthAmerica);
        assert_eq!(
            map_region("Atlantis", &t).unwrap_err(),
            HarmonizeError::UnmappedCountry("Atlantis".into())
        );
    }

    #[test]
    fn region_table_covers_every_canonical() {
        let aliases = CountryAliasTable::builtin();
        let regions = RegionTable::builtin();
        assert!(regions.unmapped(&aliases).is_empty(), "{:?}", regions.unmapped(&aliases));
    }

    fn rec(id: &str, name: &str, grade: Grade, start: Option<i32>, url: &str) -> ProjectRecord {
        let mut r = validate_record(&masakhane_row()).unwrap();
        r.id = id.into();
        r.canonical_name = name.into();
        r.dedup_key = normalize_name(name).unwrap();
        r.evidence_grade = grade;
        r.start_year = start;
        r.provenance_url = format!("{url}/prov");
        r.official_url = format!("{url}/home");
        r.source_url_2 = None;
        r
    }

    #[test]
    fn grade_decides_survivor() {
        let a = rec("masakhane-0002", "Masakhane", Grade::A, Some(2020), "https://a.org");
        let b = rec("masakhane-0001", "masakhane", Grade::B, Some(2019), "https://b.org");
        let (out, report) = dedupe(vec![b.clone(), a.clone()]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "masakhane-0002");
        assert!(out[0].alternate_links.contains(&b.provenance_url));
        assert_eq!(
            report,
            vec![MergeEntry {
                dedup_key: "masakhane".into(),
                survivor_id: "masakhane-0002".into(),
                absorbed_ids: vec!["masakhane-0001".into()],
            }]
        );
    }

    #[test]
    fn distinct_keys_pass_through() {
        let a = rec("a-0001", "Alpha", Grade::A, None, "https://a.org");
        let b = rec("b-0001", "Beta", Grade::C, None, "https://b.org");
        let (out, report) = dedupe(vec![a.clone(), b.clone()]);
        assert_eq!(out, vec![a, b]);
        assert!(report.is_empty());
        assert_eq!(dedupe(Vec::new()), (Vec::new(), Vec::new()));
    }

    #[test]
    fn three_way_merge() {
        // Same grade: earliest start year wins; the other two are absorbed
        // in survivor order (2015 before absent year).
        let a = rec("x-0003", "X", Grade::B, None, "https://a.org");
        let b = rec("x-0002", "x", Grade::B, Some(2018), "https://b.org");
        let c = rec("x-0001", "X.", Grade::B, Some(2015), "https://c.org");
        let (out, report) = dedupe(vec![a.clone(), b.clone(), c.clone()]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "x-0001");
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].absorbed_ids, vec!["x-0002", "x-0003"]);
        assert_eq!(
            out[0].alternate_links,
            vec![
                "https://b.org/prov".to_string(),
                "https://b.org/home".to_string(),
                "https://a.org/prov".to_string(),
                "https://a.org/home".to_string(),
            ]
        );
    }

    #[test]
    fn id_breaks_full_ties() {
        let a = rec("y-0002", "Y", Grade::A, Some(2020), "https://a.org");
        let b = rec("y-0001", "Y", Grade::A, Some(2020), "https://b.org");
        let (out, _) = dedupe(vec![a, b]);
        assert_eq!(out[0].id, "y-0001");
    }
}
