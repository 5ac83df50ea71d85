//! Corpus-level statistics: field completeness, missingness bands,
//! label distributions and provenance-domain rankings.
//!
//! Percentages are kept as integer tenths so that rounding and band
//! thresholds are exact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::geocode::geocoded_count;
use crate::record::{column, ProjectRecord};
use crate::schema::{Grade, LifecycleStage, Region, Review, Status, Tier, Verification};

/// Fields reported in the default completeness table, in display order.
pub const COMPLETENESS_FIELDS: &[&str] = &[
    "city",
    "lead_organization",
    "provenance_url",
    "official_url",
    "source_url_2",
    "source_url_3",
    "partner_organizations",
    "start_year",
    "end_year",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error("percent {0} outside [0, 100]")]
    OutOfRange(f64),
}

/// A percentage with exactly one fractional digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percent {
    tenths: u32,
}

impl Percent {
    pub const HUNDRED: Percent = Percent { tenths: 1000 };

    /// `count / total * 100`, rounded half-up to one decimal.
    /// An empty corpus reports 0.0.
    pub fn of(count: usize, total: usize) -> Percent {
        if total == 0 {
            return Percent { tenths: 0 };
        }
        let (count, total) = (count as u64, total as u64);
        // round(1000c/n) with ties up == floor((2000c + n) / 2n)
        let tenths = (2000 * count + total) / (2 * total);
        Percent { tenths: tenths as u32 }
    }

    pub fn from_tenths(tenths: u32) -> Option<Percent> {
        (tenths <= 1000).then_some(Percent { tenths })
    }

    /// Nearest tenth of a float percentage.
    pub fn from_f64(value: f64) -> Result<Percent, MetricsError> {
        if !(0.0..=100.0).contains(&value) {
            return Err(MetricsError::OutOfRange(value));
        }
        Ok(Percent { tenths: (value * 10.0).round() as u32 })
    }

    pub fn tenths(self) -> u32 {
        self.tenths
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.tenths) / 10.0
    }

    pub fn complement(self) -> Percent {
        Percent { tenths: 1000 - self.tenths }
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.tenths / 10, self.tenths % 10)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Percent::from_f64(v).map_err(serde::de::Error::custom)
    }
}

/// Share of records missing a field: low < 30% ≤ medium ≤ 70% < high.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingnessBand {
    Low,
    Medium,
    High,
}

/// Band for a missing-share percentage.
pub fn band_for_missing(missing: Percent) -> MissingnessBand {
    match missing.tenths() {
        t if t < 300 => MissingnessBand::Low,
        t if t <= 700 => MissingnessBand::Medium,
        _ => MissingnessBand::High,
    }
}

/// Band for a completeness percentage (missing share is its complement).
pub fn missingness_band(completeness: f64) -> Result<MissingnessBand, MetricsError> {
    Ok(band_for_missing(Percent::from_f64(completeness)?.complement()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldCompleteness {
    pub field: String,
    pub present_count: usize,
    pub percent: Percent,
    pub band: MissingnessBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub total: usize,
    pub fields: Vec<FieldCompleteness>,
}

impl CompletenessReport {
    pub fn get(&self, field: &str) -> Option<&FieldCompleteness> {
        self.fields.iter().find(|f| f.field == field)
    }
}

/// Presence counts for the listed canonical columns.
pub fn field_completeness(records: &[ProjectRecord], fields: &[&str]) -> Result<CompletenessReport, MetricsError> {
    let mut out = Vec::with_capacity(fields.len());
    for name in fields {
        let col = column(name).ok_or_else(|| MetricsError::UnknownField(name.to_string()))?;
        let present_count = records
            .iter()
            .filter(|r| r.is_present(col).unwrap_or(false))
            .count();
        let percent = Percent::of(present_count, records.len());
        out.push(FieldCompleteness {
            field: col.to_string(),
            present_count,
            percent,
            band: band_for_missing(percent.complement()),
        });
    }
    Ok(CompletenessReport { total: records.len(), fields: out })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub total: usize,
    pub tiers: BTreeMap<String, usize>,
    /// Counted once per (record, stage) pair.
    pub lifecycle_stages: BTreeMap<String, usize>,
    pub regions: BTreeMap<String, usize>,
    pub statuses: BTreeMap<String, usize>,
    pub verification: BTreeMap<String, usize>,
    pub grades: BTreeMap<String, usize>,
    pub review: BTreeMap<String, usize>,
    pub start_years: BTreeMap<i32, usize>,
}

fn tally<T: Copy + fmt::Display>(
    all: &[T],
    values: impl Iterator<Item = T>,
) -> BTreeMap<String, usize> {
    let mut out: BTreeMap<String, usize> = all.iter().map(|v| (v.to_string(), 0)).collect();
    for v in values {
        *out.entry(v.to_string()).or_default() += 1;
    }
    out
}

pub fn distributions(records: &[ProjectRecord]) -> DistributionReport {
    let mut start_years = BTreeMap::new();
    for y in records.iter().filter_map(|r| r.start_year) {
        *start_years.entry(y).or_default() += 1;
    }
    DistributionReport {
        total: records.len(),
        tiers: tally(Tier::ALL, records.iter().map(|r| r.participation_tier)),
        lifecycle_stages: tally(
            LifecycleStage::ALL,
            records.iter().flat_map(|r| {
                // A stage listed twice on one record still counts once.
                r.lifecycle_stages.iter().copied().collect::<BTreeSet<_>>()
            }),
        ),
        regions: tally(Region::ALL, records.iter().map(|r| r.region)),
        statuses: tally(Status::ALL, records.iter().map(|r| r.activity_status)),
        verification: tally(Verification::ALL, records.iter().map(|r| r.verification_status)),
        grades: tally(Grade::ALL, records.iter().map(|r| r.evidence_grade)),
        review: tally(Review::ALL, records.iter().map(|r| r.review_status)),
        start_years,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedCount {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedUrl {
    pub record_id: String,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainReport {
    /// Descending by count, ties in lexicographic order.
    pub domains: Vec<RankedCount>,
    pub suffixes: Vec<RankedCount>,
    pub malformed: Vec<MalformedUrl>,
    /// Records whose provenance URL is withheld from public output.
    pub withheld: usize,
}

impl DomainReport {
    pub fn top(&self, n: usize) -> &[RankedCount] {
        &self.domains[..n.min(self.domains.len())]
    }
}

/// Registered domain (host minus a leading `www.`) and final-label suffix.
pub fn domain_and_suffix(raw: &str) -> Option<(String, String)> {
    let parsed = url::Url::parse(raw.trim()).ok()?;
    let host = match parsed.host()? {
        url::Host::Domain(h) => h.trim_end_matches('.').to_ascii_lowercase(),
        _ => return None,
    };
    let domain = host.strip_prefix("www.").unwrap_or(&host).to_string();
    let last = domain.rsplit('.').next()?;
    if domain.is_empty() || last.is_empty() || !domain.contains('.') {
        return None;
    }
    let suffix = format!(".{last}");
    Some((domain, suffix))
}

fn rank(counts: BTreeMap<String, usize>) -> Vec<RankedCount> {
    let mut v: Vec<RankedCount> = counts
        .into_iter()
        .map(|(label, count)| RankedCount { label, count })
        .collect();
    // BTreeMap iteration is already lexicographic; a stable sort keeps it
    // as the tie order.
    v.sort_by_key(|r| std::cmp::Reverse(r.count));
    v
}

/// Rank provenance domains. Records for which `withhold` returns true are
/// counted as withheld instead of being attributed to a domain.
pub fn provenance_domains_with(
    records: &[ProjectRecord],
    withhold: impl Fn(&ProjectRecord) -> bool,
) -> DomainReport {
    let mut domains = BTreeMap::new();
    let mut suffixes = BTreeMap::new();
    let mut malformed = Vec::new();
    let mut withheld = 0;
    for r in records {
        if withhold(r) {
            withheld += 1;
            continue;
        }
        match domain_and_suffix(&r.provenance_url) {
            Some((d, s)) => {
                *domains.entry(d).or_default() += 1;
                *suffixes.entry(s).or_default() += 1;
            }
            None => malformed.push(MalformedUrl {
                record_id: r.id.clone(),
                url: r.provenance_url.clone(),
            }),
        }
    }
    DomainReport {
        domains: rank(domains),
        suffixes: rank(suffixes),
        malformed,
        withheld,
    }
}

pub fn provenance_domains(records: &[ProjectRecord]) -> DomainReport {
    provenance_domains_with(records, |_| false)
}

/// Everything published as `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub record_count: usize,
    pub geocoded_count: usize,
    pub documentation_insufficient: usize,
    pub completeness: CompletenessReport,
    pub distributions: DistributionReport,
    pub provenance_domains: DomainReport,
}

impl MetricsReport {
    /// Canonical serialized form shared by every output channel.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }
}

pub fn metrics_report(records: &[ProjectRecord], withhold_provenance: impl Fn(&ProjectRecord) -> bool) -> MetricsReport {
    MetricsReport {
        record_count: records.len(),
        geocoded_count: geocoded_count(records),
        documentation_insufficient: records.iter().filter(|r| r.documentation_insufficient).count(),
        completeness: field_completeness(records, COMPLETENESS_FIELDS).expect("default fields exist"),
        distributions: distributions(records),
        provenance_domains: provenance_domains_with(records, withhold_provenance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::tests::masakhane_row;
    use crate::record::validate_record;

    #[test]
    fn half_up_rounding() {
        assert_eq!(Percent::of(130, 131).to_string(), "99.2");
        assert_eq!(Percent::of(112, 131).to_string(), "85.5");
        assert_eq!(Percent::of(95, 131).to_string(), "72.5");
        assert_eq!(Percent::of(29, 131).to_string(), "22.1");
        assert_eq!(Percent::of(131, 131).to_string(), "100.0");
        // 1/8 = 12.5% exactly; 1/16 = 6.25% -> 6.3 under half-up.
        assert_eq!(Percent::of(1, 8).to_string(), "12.5");
        assert_eq!(Percent::of(1, 16).to_string(), "6.3");
        assert_eq!(Percent::of(0, 10).to_string(), "0.0");
        assert_eq!(Percent::of(0, 0).to_string(), "0.0");
    }

    #[test]
    fn percent_serializes_as_number() {
        assert_eq!(serde_json::to_string(&Percent::of(130, 131)).unwrap(), "99.2");
        assert_eq!(serde_json::to_string(&Percent::HUNDRED).unwrap(), "100.0");
        let back: Percent = serde_json::from_str("85.5").unwrap();
        assert_eq!(back, Percent::of(112, 131));
    }

    #[test]
    fn bands() {
        assert_eq!(missingness_band(22.1).unwrap(), MissingnessBand::High);
        assert_eq!(missingness_band(85.5).unwrap(), MissingnessBand::Low);
        assert_eq!(missingness_band(50.0).unwrap(), MissingnessBand::Medium);
        // missing 29.9 / 30.0 / 70.0 / 70.1
        assert_eq!(missingness_band(70.1).unwrap(), MissingnessBand::Low);
        assert_eq!(missingness_band(70.0).unwrap(), MissingnessBand::Medium);
        assert_eq!(missingness_band(30.0).unwrap(), MissingnessBand::Medium);
        assert_eq!(missingness_band(29.9).unwrap(), MissingnessBand::High);
        assert!(missingness_band(100.1).is_err());
        assert!(missingness_band(-0.5).is_err());
    }

    #[test]
    fn completeness_edge_cases() {
        let mut r = validate_record(&masakhane_row()).unwrap();
        let one = field_completeness(std::slice::from_ref(&r), &["start_year"]).unwrap();
        assert_eq!(one.fields[0].percent.to_string(), "100.0");

        r.partner_organizations.clear();
        r.end_year = None;
        let ten = vec![r; 10];
        let rep = field_completeness(&ten, &["partner_organizations", "end_year"]).unwrap();
        assert!(rep.fields.iter().all(|f| f.present_count == 0 && f.percent.to_string() == "0.0"));

        assert_eq!(
            field_completeness(&ten, &["colour"]).unwrap_err(),
            MetricsError::UnknownField("colour".into())
        );
    }

    #[test]
    fn stage_counting_is_multi_label() {
        let base = validate_record(&masakhane_row()).unwrap();
        let a = ProjectRecord {
            lifecycle_stages: vec![LifecycleStage::ProblemFormulation, LifecycleStage::Governance],
            ..base.clone()
        };
        let b = ProjectRecord { lifecycle_stages: vec![LifecycleStage::Governance], ..base };
        let d = distributions(&[a, b]);
        assert_eq!(d.lifecycle_stages["problem_formulation"], 1);
        assert_eq!(d.lifecycle_stages["governance"], 2);
        assert_eq!(d.lifecycle_stages["model_training"], 0);
        assert_eq!(d.tiers.values().sum::<usize>(), 2);
    }

    #[test]
    fn one_record_per_tier() {
        let base = validate_record(&masakhane_row()).unwrap();
        let recs: Vec<_> = Tier::ALL
            .iter()
            .map(|t| ProjectRecord { participation_tier: *t, ..base.clone() })
            .collect();
        let d = distributions(&recs);
        assert!(d.tiers.values().all(|&c| c == 1));
        assert_eq!(d.tiers.len(), 6);
    }

    #[test]
    fn domain_extraction() {
        assert_eq!(
            domain_and_suffix("https://www.example.org/p"),
            Some(("example.org".into(), ".org".into()))
        );
        assert_eq!(domain_and_suffix("https://a.gov.uk/x").unwrap().1, ".uk");
        assert_eq!(domain_and_suffix("https://dl.acm.org/doi/1").unwrap().0, "dl.acm.org");
        assert_eq!(domain_and_suffix("HTTPS://Mila.Quebec/en").unwrap().0, "mila.quebec");
        assert_eq!(domain_and_suffix("not a url"), None);
        assert_eq!(domain_and_suffix("https://10.0.0.1/x"), None);
        assert_eq!(domain_and_suffix("https://localhost/x"), None);
    }

    #[test]
    fn ranking_ties_are_lexicographic() {
        let base = validate_record(&masakhane_row()).unwrap();
        let urls = [
            "https://b.org/1",
            "https://a.org/1",
            "https://c.com/1",
            "https://c.com/2",
            "::bad::",
        ];
        let recs: Vec<_> = urls
            .iter()
            .enumerate()
            .map(|(i, u)| ProjectRecord {
                id: format!("r-{i:04}"),
                provenance_url: u.to_string(),
                ..base.clone()
            })
            .collect();
        let rep = provenance_domains(&recs);
        let labels: Vec<_> = rep.domains.iter().map(|d| (d.label.as_str(), d.count)).collect();
        assert_eq!(labels, vec![("c.com", 2), ("a.org", 1), ("b.org", 1)]);
        assert_eq!(rep.suffixes[0], RankedCount { label: ".com".into(), count: 2 });
        assert_eq!(rep.suffixes[1], RankedCount { label: ".org".into(), count: 2 });
        assert_eq!(rep.malformed.len(), 1);
        assert_eq!(rep.domains.iter().map(|d| d.count).sum::<usize>(), 4);
    }
}
