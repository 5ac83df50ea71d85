//! Record filters and pagination for `GET /records`.

use std::collections::BTreeMap;

use atlas_core::harmonize::normalize_name;
use atlas_core::projection::Redactions;
use atlas_core::schema::{Grade, LifecycleStage, Region, Review, Status, Tier, Verification};
use atlas_core::ProjectRecord;

use crate::error::ApiError;

pub const DEFAULT_PAGE_SIZE: usize = 50;
pub const MAX_PAGE_SIZE: usize = 500;

/// Conjunction of optional field constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterQuery {
    pub region: Option<Region>,
    pub country: Option<String>,
    pub application_domain: Option<String>,
    pub organization_type: Option<String>,
    pub participation_tier: Option<Tier>,
    pub lifecycle_stage: Option<LifecycleStage>,
    pub verification_status: Option<Verification>,
    pub evidence_grade: Option<Grade>,
    pub review_status: Option<Review>,
    pub activity_status: Option<Status>,
    pub q: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Page {
    pub page: usize,
    pub page_size: usize,
}

impl Default for Page {
    fn default() -> Self {
        Page { page: 1, page_size: DEFAULT_PAGE_SIZE }
    }
}

fn parse_enum<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ApiError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| ApiError::bad_request("bad_filter", e.to_string()).with_details(serde_json::json!({ "key": key })))
}

fn parse_key(value: &str) -> Result<String, ApiError> {
    normalize_name(value).map_err(|e| ApiError::bad_request("bad_filter", e.to_string()))
}

fn parse_count(key: &str, value: &str) -> Result<usize, ApiError> {
    value
        .trim()
        .parse()
        .map_err(|_| ApiError::bad_request("bad_pagination", format!("{key} must be a positive integer")))
}

/// Parse query parameters. Unknown keys and invalid enum values are rejected.
pub fn parse_query(params: &BTreeMap<String, String>) -> Result<(FilterQuery, Option<Page>), ApiError> {
    let mut f = FilterQuery::default();
    let mut page = Page::default();
    let mut paged = false;
    for (key, value) in params {
        let v = value.as_str();
        match key.as_str() {
            "region" => f.region = Some(parse_enum(key, v)?),
            "country" => f.country = Some(parse_key(v)?),
            "application_domain" | "domain" => f.application_domain = Some(parse_key(v)?),
            "organization_type" => f.organization_type = Some(parse_key(v)?),
            "participation_tier" | "tier" => f.participation_tier = Some(parse_enum(key, v)?),
            "lifecycle_stage" | "stage" => f.lifecycle_stage = Some(parse_enum(key, v)?),
            "verification_status" => f.verification_status = Some(parse_enum(key, v)?),
            "evidence_grade" | "grade" => f.evidence_grade = Some(parse_enum(key, v)?),
            "review_status" => f.review_status = Some(parse_enum(key, v)?),
            "activity_status" | "status" => f.activity_status = Some(parse_enum(key, v)?),
            "q" => {
                let q = v.trim().to_lowercase();
                f.q = (!q.is_empty()).then_some(q);
            }
            "page" => {
                paged = true;
                page.page = parse_count(key, v)?;
                if page.page == 0 {
                    return Err(ApiError::bad_request("bad_pagination", "page starts at 1"));
                }
            }
            "page_size" => {
                paged = true;
                page.page_size = parse_count(key, v)?;
                if !(1..=MAX_PAGE_SIZE).contains(&page.page_size) {
                    return Err(ApiError::bad_request(
                        "bad_pagination",
                        format!("page_size must be between 1 and {MAX_PAGE_SIZE}"),
                    ));
                }
            }
            other => {
                return Err(ApiError::bad_request("bad_filter", format!("unknown filter key {other:?}"))
                    .with_details(serde_json::json!({ "key": other })))
            }
        }
    }
    Ok((f, paged.then_some(page)))
}

fn same_key(value: &str, wanted: &str) -> bool {
    normalize_name(value).is_ok_and(|k| k == wanted)
}

impl FilterQuery {
    /// Whether `r` satisfies every constraint. Redacted fields never match,
    /// so filtering cannot be used to probe a masked value.
    pub fn matches(&self, r: &ProjectRecord, redactions: &Redactions) -> bool {
        let open = |field: &str| !redactions.is_redacted(&r.id, field);
        let check = |field: &str, ok: bool| open(field) && ok;
        self.region.is_none_or(|v| check("region", r.region == v))
            && self.country.as_deref().is_none_or(|v| check("country", same_key(&r.country, v)))
            && self
                .application_domain
                .as_deref()
                .is_none_or(|v| check("application_domain", same_key(&r.application_domain, v)))
            && self
                .organization_type
                .as_deref()
                .is_none_or(|v| check("organization_type", same_key(&r.organization_type, v)))
            && self.participation_tier.is_none_or(|v| check("participation_tier", r.participation_tier == v))
            && self.lifecycle_stage.is_none_or(|v| check("lifecycle_stages", r.lifecycle_stages.contains(&v)))
            && self.verification_status.is_none_or(|v| check("verification_status", r.verification_status == v))
            && self.evidence_grade.is_none_or(|v| check("evidence_grade", r.evidence_grade == v))
            && self.review_status.is_none_or(|v| check("review_status", r.review_status == v))
            && self.activity_status.is_none_or(|v| check("activity_status", r.activity_status == v))
            && self.q.as_deref().is_none_or(|q| {
                check("canonical_name", r.canonical_name.to_lowercase().contains(q))
                    || check("lead_organization", r.lead_organization.to_lowercase().contains(q))
            })
    }
}

/// Matching records ordered by canonical name, then id.
pub fn select<'a>(
    records: impl Iterator<Item = &'a ProjectRecord>,
    query: &FilterQuery,
    redactions: &Redactions,
) -> Vec<&'a ProjectRecord> {
    let mut out: Vec<&ProjectRecord> = records.filter(|r| query.matches(r, redactions)).collect();
    out.sort_by(|a, b| a.canonical_name.cmp(&b.canonical_name).then_with(|| a.id.cmp(&b.id)));
    out
}

/// Slice of `items` for a 1-based page.
pub fn paginate<T>(items: &[T], page: Page) -> &[T] {
    let start = (page.page - 1).saturating_mul(page.page_size).min(items.len());
    let end = start.saturating_add(page.page_size).min(items.len());
    &items[start..end]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(pairs: &[(&str, &str)]) -> Result<(FilterQuery, Option<Page>), ApiError> {
        parse_query(&pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
    }

    #[test]
    fn enum_spellings() {
        let (f, _) = q(&[("tier", "CoDesign")]).unwrap();
        assert_eq!(f.participation_tier, Some(Tier::CoDesign));
        let (f, _) = q(&[("participation_tier", "co-design"), ("region", "Africa")]).unwrap();
        assert_eq!(f.participation_tier, Some(Tier::CoDesign));
        assert_eq!(f.region, Some(Region::Africa));
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert_eq!(q(&[("colour", "red")]).unwrap_err().code, "bad_filter");
        assert_eq!(q(&[("tier", "telepathy")]).unwrap_err().code, "bad_filter");
        assert_eq!(q(&[("page_size", "0")]).unwrap_err().code, "bad_pagination");
        assert_eq!(q(&[("page_size", "501")]).unwrap_err().code, "bad_pagination");
        assert_eq!(q(&[("page", "0")]).unwrap_err().code, "bad_pagination");
        assert_eq!(q(&[("page", "x")]).unwrap_err().code, "bad_pagination");
        assert!(q(&[("page_size", "500")]).is_ok());
    }

    #[test]
    fn pages_partition() {
        let items: Vec<u32> = (0..11).collect();
        let mut seen = Vec::new();
        for p in 1..=4 {
            seen.extend_from_slice(paginate(&items, Page { page: p, page_size: 4 }));
        }
        assert_eq!(seen, items);
        assert!(paginate(&items, Page { page: 99, page_size: 4 }).is_empty());
    }
}
