//! Canonical project record, field-level validation and the minimal
//! participation documentation check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::harmonize::normalize_name;
use crate::schema::{Grade, LifecycleStage, Precision, Region, Review, Status, Tier, Verification};

/// Raw field map as read from a CSV row or an intake form, keyed by
/// canonical column name.
pub type RawRecord = BTreeMap<String, String>;

/// Separator used when multi-valued fields are flattened to one cell.
pub const LIST_SEPARATOR: &str = "; ";

/// Canonical CSV header, in column order.
pub const COLUMNS: &[&str] = &[
    "id",
    "canonical_name",
    "dedup_key",
    "alternate_links",
    "provenance_url",
    "source_url_2",
    "source_url_3",
    "official_url",
    "country",
    "city",
    "region",
    "lead_organization",
    "organization_type",
    "partner_organizations",
    "activity_status",
    "start_year",
    "end_year",
    "application_domain",
    "domain_category",
    "ai_modality",
    "participation_tier",
    "participants",
    "participation_methods",
    "lifecycle_stages",
    "decision_points",
    "mechanism",
    "evidence_notes",
    "verification_status",
    "evidence_grade",
    "review_status",
    "documentation_insufficient",
    "suppress_locality",
    "latitude",
    "longitude",
    "precision",
];

/// Columns whose cells hold `; `-joined lists.
pub const LIST_COLUMNS: &[&str] = &[
    "alternate_links",
    "partner_organizations",
    "participants",
    "participation_methods",
    "lifecycle_stages",
    "decision_points",
];

pub const MIN_YEAR: i32 = 1900;
pub const MAX_YEAR: i32 = 2100;
const SLUG_MAX: usize = 48;

/// Look up the canonical spelling of a column name.
pub fn column(name: &str) -> Option<&'static str> {
    COLUMNS.iter().copied().find(|c| *c == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoPoint {
    /// `None` when either coordinate is outside its valid range or not finite.
    pub fn new(latitude: f64, longitude: f64) -> Option<Self> {
        let ok = latitude.is_finite()
            && longitude.is_finite()
            && (-90.0..=90.0).contains(&latitude)
            && (-180.0..=180.0).contains(&longitude);
        ok.then_some(GeoPoint { latitude, longitude })
    }
}

/// Approximate location anchor. Coordinates exist only for the two
/// geocoded precisions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "AnchorRepr", into = "AnchorRepr")]
pub enum LocationAnchor {
    Locality(GeoPoint),
    Country(GeoPoint),
    #[default]
    Ungeocoded,
}

impl LocationAnchor {
    pub fn precision(&self) -> Precision {
        match self {
            LocationAnchor::Locality(_) => Precision::Locality,
            LocationAnchor::Country(_) => Precision::Country,
            LocationAnchor::Ungeocoded => Precision::None,
        }
    }

    pub fn point(&self) -> Option<GeoPoint> {
        match self {
            LocationAnchor::Locality(p) | LocationAnchor::Country(p) => Some(*p),
            LocationAnchor::Ungeocoded => None,
        }
    }

    pub fn is_geocoded(&self) -> bool {
        self.point().is_some()
    }
}

#[derive(Serialize, Deserialize)]
struct AnchorRepr {
    latitude: Option<f64>,
    longitude: Option<f64>,
    precision: Precision,
}

impl From<LocationAnchor> for AnchorRepr {
    fn from(a: LocationAnchor) -> Self {
        AnchorRepr {
            latitude: a.point().map(|p| p.latitude),
            longitude: a.point().map(|p| p.longitude),
            precision: a.precision(),
        }
    }
}

impl TryFrom<AnchorRepr> for LocationAnchor {
    type Error = String;

    fn try_from(r: AnchorRepr) -> Result<Self, String> {
        match (r.precision, r.latitude, r.longitude) {
            (Precision::None, None, None) => Ok(LocationAnchor::Ungeocoded),
            (Precision::None, _, _) => Err("precision none must not carry coordinates".into()),
            (p, Some(lat), Some(lon)) => {
                let point = GeoPoint::new(lat, lon).ok_or("coordinates out of range")?;
                Ok(if p == Precision::Locality {
                    LocationAnchor::Locality(point)
                } else {
                    LocationAnchor::Country(point)
                })
            }
            _ => Err("geocoded anchor needs both latitude and longitude".into()),
        }
    }
}

/// One harmonized participatory-AI initiative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub id: String,
    pub canonical_name: String,
    pub dedup_key: String,
    pub alternate_links: Vec<String>,
    pub provenance_url: String,
    pub source_url_2: Option<String>,
    pub source_url_3: Option<String>,
    pub official_url: String,
    pub country: String,
    pub city: Option<String>,
    pub region: Region,
    pub lead_organization: String,
    pub organization_type: String,
    pub partner_organizations: Vec<String>,
    pub activity_status: Status,
    pub start_year: Option<i32>,
    pub end_year: Option<i32>,
    pub application_domain: String,
    pub domain_category: String,
    pub ai_modality: String,
    pub participation_tier: Tier,
    pub participants: Vec<String>,
    pub participation_methods: Vec<String>,
    pub lifecycle_stages: Vec<LifecycleStage>,
    pub decision_points: Vec<String>,
    pub mechanism: String,
    pub evidence_notes: String,
    pub verification_status: Verification,
    pub evidence_grade: Grade,
    pub review_status: Review,
    pub documentation_insufficient: bool,
    pub suppress_locality: bool,
    #[serde(flatten)]
    pub anchor: LocationAnchor,
}

impl ProjectRecord {
    /// Cell text for a canonical column, exactly as written to CSV.
    pub fn field_text(&self, column: &str) -> Option<String> {
        let join = |v: &[String]| v.join(LIST_SEPARATOR);
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        let year = |v: Option<i32>| v.map(|y| y.to_string()).unwrap_or_default();
        let text = match column {
            "id" => self.id.clone(),
            "canonical_name" => self.canonical_name.clone(),
            "dedup_key" => self.dedup_key.clone(),
            "alternate_links" => join(&self.alternate_links),
            "provenance_url" => self.provenance_url.clone(),
            "source_url_2" => opt(&self.source_url_2),
            "source_url_3" => opt(&self.source_url_3),
            "official_url" => self.official_url.clone(),
            "country" => self.country.clone(),
            "city" => opt(&self.city),
            "region" => self.region.token().to_string(),
            "lead_organization" => self.lead_organization.clone(),
            "organization_type" => self.organization_type.clone(),
            "partner_organizations" => join(&self.partner_organizations),
            "activity_status" => self.activity_status.token().to_string(),
            "start_year" => year(self.start_year),
            "end_year" => year(self.end_year),
            "application_domain" => self.application_domain.clone(),
            "domain_category" => self.domain_category.clone(),
            "ai_modality" => self.ai_modality.clone(),
            "participation_tier" => self.participation_tier.token().to_string(),
            "participants" => join(&self.participants),
            "participation_methods" => join(&self.participation_methods),
            "lifecycle_stages" => self
                .lifecycle_stages
                .iter()
                .map(|s| s.token())
                .collect::<Vec<_>>()
                .join(LIST_SEPARATOR),
            "decision_points" => join(&self.decision_points),
            "mechanism" => self.mechanism.clone(),
            "evidence_notes" => self.evidence_notes.clone(),
            "verification_status" => self.verification_status.token().to_string(),
            "evidence_grade" => self.evidence_grade.token().to_string(),
            "review_status" => self.review_status.token().to_string(),
            "documentation_insufficient" => self.documentation_insufficient.to_string(),
            "suppress_locality" => self.suppress_locality.to_string(),
            "latitude" => self.anchor.point().map(|p| p.latitude.to_string()).unwrap_or_default(),
            "longitude" => self.anchor.point().map(|p| p.longitude.to_string()).unwrap_or_default(),
            "precision" => self.anchor.precision().token().to_string(),
            _ => return None,
        };
        Some(text)
    }

    /// Whether the column holds a non-empty value.
    pub fn is_present(&self, column: &str) -> Option<bool> {
        self.field_text(column).map(|t| !t.is_empty())
    }

    /// One cell per canonical column.
    pub fn to_row(&self) -> Vec<String> {
        COLUMNS
            .iter()
            .map(|c| self.field_text(c).unwrap_or_default())
            .collect()
    }

    pub fn to_raw(&self) -> RawRecord {
        COLUMNS
            .iter()
            .map(|c| (c.to_string(), self.field_text(c).unwrap_or_default()))
            .collect()
    }

    /// Every URL the record points at: provenance, corroborating sources,
    /// official site and alternate links.
    pub fn urls(&self) -> Vec<&str> {
        let mut out = vec![self.provenance_url.as_str()];
        out.extend(self.source_url_2.as_deref());
        out.extend(self.source_url_3.as_deref());
        out.push(self.official_url.as_str());
        out.extend(self.alternate_links.iter().map(String::as_str));
        out
    }
}

/// A single violated record invariant.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("missing required field {0}")]
    MissingRequiredField(&'static str),
    #[error("unknown value {value:?} for {field}")]
    UnknownEnumValue { field: &'static str, value: String },
    #[error("start_year {start} is after end_year {end}")]
    YearOrderViolation { start: i32, end: i32 },
    #[error("{field} {value} outside [{MIN_YEAR}, {MAX_YEAR}]")]
    YearOutOfRange { field: &'static str, value: i32 },
    #[error("coordinate/precision mismatch: {0}")]
    CoordinatePrecisionMismatch(String),
    #[error("{field} {value:?} is not a valid coordinate")]
    CoordinateOutOfRange { field: &'static str, value: String },
    #[error("invalid value {value:?} for {field}")]
    InvalidValue { field: &'static str, value: String },
    #[error("invalid id {0:?}: expected slug-NNNN")]
    InvalidId(String),
    #[error("{field} appears to contain personal contact data")]
    PersonalData { field: &'static str },
}

impl ValidationError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::MissingRequiredField(_) => "missing_required_field",
            ValidationError::UnknownEnumValue { .. } => "unknown_enum_value",
            ValidationError::YearOrderViolation { .. } => "year_order_violation",
            ValidationError::YearOutOfRange { .. } => "year_out_of_range",
            ValidationError::CoordinatePrecisionMismatch(_) => "coordinate_precision_mismatch",
            ValidationError::CoordinateOutOfRange { .. } => "coordinate_out_of_range",
            ValidationError::InvalidValue { .. } => "invalid_value",
            ValidationError::InvalidId(_) => "invalid_id",
            ValidationError::PersonalData { .. } => "personal_data",
        }
    }

    /// Column the error refers to, when it is about a single field.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            ValidationError::MissingRequiredField(f) => Some(f),
            ValidationError::UnknownEnumValue { field, .. }
            | ValidationError::YearOutOfRange { field, .. }
            | ValidationError::CoordinateOutOfRange { field, .. }
            | ValidationError::InvalidValue { field, .. }
            | ValidationError::PersonalData { field } => Some(field),
            ValidationError::YearOrderViolation { .. } => Some("end_year"),
            ValidationError::CoordinatePrecisionMismatch(_) => Some("precision"),
            ValidationError::InvalidId(_) => Some("id"),
        }
    }
}

impl Serialize for ValidationError {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ValidationError", 3)?;
        st.serialize_field("code", self.code())?;
        st.serialize_field("field", &self.field())?;
        st.serialize_field("message", &self.to_string())?;
        st.end()
    }
}

/// Complete list of violations found in one candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for ValidationErrors {}

/// Lowercase ASCII slug of a dedup key, at most 48 characters.
pub fn slugify(key: &str) -> String {
    let mut slug = String::new();
    for c in key.nfkd() {
        if c.is_ascii_alphanumeric() {
            slug.push(c.to_ascii_lowercase());
        } else if (c.is_whitespace() || c.is_ascii_punctuation()) && !slug.ends_with('-') && !slug.is_empty() {
            slug.push('-');
        }
    }
    slug.truncate(SLUG_MAX);
    let slug = slug.trim_matches('-').to_string();
    if slug.is_empty() {
        "record".to_string()
    } else {
        slug
    }
}

/// Format an id from a slug and its disambiguating counter.
pub fn format_id(slug: &str, counter: u32) -> String {
    format!("{slug}-{counter:04}")
}

/// First free id for `dedup_key` given a predicate telling which ids are taken.
pub fn assign_id(dedup_key: &str, taken: impl Fn(&str) -> bool) -> String {
    let slug = slugify(dedup_key);
    (1..=9999)
        .map(|n| format_id(&slug, n))
        .find(|id| !taken(id))
        .expect("more than 9999 records share one slug")
}

/// Split an id into slug and counter if it follows the id scheme.
pub fn parse_id(id: &str) -> Option<(&str, u32)> {
    let (slug, counter) = id.rsplit_once('-')?;
    let slug_ok = !slug.is_empty()
        && slug.len() <= SLUG_MAX
        && !slug.starts_with('-')
        && !slug.ends_with('-')
        && !slug.contains("--")
        && slug.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-');
    let counter_ok = counter.len() == 4 && counter.chars().all(|c| c.is_ascii_digit());
    if slug_ok && counter_ok {
        Some((slug, counter.parse().ok()?))
    } else {
        None
    }
}

fn split_list(cell: &str) -> Vec<String> {
    cell.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn looks_like_email(s: &str) -> bool {
    s.split_whitespace().any(|tok| {
        let Some((user, host)) = tok.split_once('@') else {
            return false;
        };
        !user.is_empty() && host.contains('.') && !host.starts_with('.') && !host.ends_with('.')
    })
}

struct Reader<'a> {
    raw: &'a RawRecord,
    errors: Vec<ValidationError>,
}

impl<'a> Reader<'a> {
    fn text(&self, field: &'static str) -> Option<String> {
        self.raw
            .get(field)
            .map(|v| v.trim())
            .filter(|v| !v.is_empty())
            .map(str::to_string)
    }

    fn required(&mut self, field: &'static str) -> String {
        self.text(field).unwrap_or_else(|| {
            self.errors.push(ValidationError::MissingRequiredField(field));
            String::new()
        })
    }

    fn list(&self, field: &'static str) -> Vec<String> {
        self.text(field).map(|v| split_list(&v)).unwrap_or_default()
    }

    fn required_list(&mut self, field: &'static str) -> Vec<String> {
        let v = self.list(field);
        if v.is_empty() {
            self.errors.push(ValidationError::MissingRequiredField(field));
        }
        v
    }

    fn enumerated<T>(&mut self, field: &'static str, fallback: T) -> T
    where
        T: std::str::FromStr,
    {
        match self.text(field) {
            None => {
                self.errors.push(ValidationError::MissingRequiredField(field));
                fallback
            }
            Some(v) => v.parse().unwrap_or_else(|_| {
                self.errors.push(ValidationError::UnknownEnumValue { field, value: v });
                fallback
            }),
        }
    }

    fn year(&mut self, field: &'static str) -> Option<i32> {
        let v = self.text(field)?;
        match v.parse::<i32>() {
            Ok(y) if (MIN_YEAR..=MAX_YEAR).contains(&y) => Some(y),
            Ok(y) => {
                self.errors.push(ValidationError::YearOutOfRange { field, value: y });
                None
            }
            Err(_) => {
                self.errors.push(ValidationError::InvalidValue { field, value: v });
                None
            }
        }
    }

    fn flag(&mut self, field: &'static str) -> bool {
        match self.text(field).map(|v| v.to_ascii_lowercase()) {
            None => false,
            Some(v) => match v.as_str() {
                "true" | "yes" | "1" | "y" => true,
                "false" | "no" | "0" | "n" => false,
                _ => {
                    self.errors.push(ValidationError::InvalidValue { field, value: v });
                    false
                }
            },
        }
    }

    fn coordinate(&mut self, field: &'static str) -> Option<f64> {
        let v = self.text(field)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.errors.push(ValidationError::CoordinateOutOfRange { field, value: v });
                None
            }
        }
    }
}

/// Parse and check a raw field map, reporting every violated invariant.
///
/// The `dedup_key` column is ignored on input and always recomputed from
/// `canonical_name`. A blank `id` gets the provisional `slug-0001`; the
/// registry bumps the counter on collision when the record is inserted.
pub fn validate_record(raw: &RawRecord) -> Result<ProjectRecord, ValidationErrors> {
    let mut r = Reader { raw, errors: Vec::new() };

    let canonical_name = r.required("canonical_name");
    let dedup_key = if canonical_name.is_empty() {
        String::new()
    } else {
        match normalize_name(&canonical_name) {
            Ok(k) => k,
            Err(_) => {
                r.errors.push(ValidationError::InvalidValue {
                    field: "canonical_name",
                    value: canonical_name.clone(),
                });
                String::new()
            }
        }
    };

    let id = match r.text("id") {
        Some(id) if parse_id(&id).is_some() => id,
        Some(id) => {
            r.errors.push(ValidationError::InvalidId(id));
            String::new()
        }
        None => format_id(&slugify(&dedup_key), 1),
    };

    let alternate_links = r.list("alternate_links");
    let provenance_url = r.required("provenance_url");
    let source_url_2 = r.text("source_url_2");
    let source_url_3 = r.text("source_url_3");
    let official_url = r.required("official_url");
    let country = r.required("country");
    let city = r.text("city");
    let region = r.enumerated("region", Region::Global);
    let lead_organization = r.required("lead_organization");
    let organization_type = r.text("organization_type").unwrap_or_default();
    let partner_organizations = r.list("partner_organizations");
    let activity_status = r.enumerated("activity_status", Status::Active);
    let start_year = r.year("start_year");
    let end_year = r.year("end_year");
    if let (Some(start), Some(end)) = (start_year, end_year) {
        if start > end {
            r.errors.push(ValidationError::YearOrderViolation { start, end });
        }
    }
    let application_domain = r.text("application_domain").unwrap_or_default();
    let domain_category = r.text("domain_category").unwrap_or_default();
    let ai_modality = r.text("ai_modality").unwrap_or_default();
    let participation_tier = r.enumerated("participation_tier", Tier::CommunityLed);
    let participants = r.required_list("participants");
    let participation_methods = r.required_list("participation_methods");

    let mut lifecycle_stages = Vec::new();
    for raw_stage in r.list("lifecycle_stages") {
        match raw_stage.parse::<LifecycleStage>() {
            Ok(s) if !lifecycle_stages.contains(&s) => lifecycle_stages.push(s),
            Ok(_) => {}
            Err(_) => r.errors.push(ValidationError::UnknownEnumValue {
                field: "lifecycle_stages",
                value: raw_stage,
            }),
        }
    }
    if lifecycle_stages.is_empty() && r.list("lifecycle_stages").is_empty() {
        r.errors.push(ValidationError::MissingRequiredField("lifecycle_stages"));
    }

    let decision_points = r.list("decision_points");
    let mechanism = r.text("mechanism").unwrap_or_default();
    let evidence_notes = r.text("evidence_notes").unwrap_or_default();
    let verification_status = r.enumerated("verification_status", Verification::LiveVerified);
    let evidence_grade = r.enumerated("evidence_grade", Grade::C);
    let review_status = r.enumerated("review_status", Review::ReviewCandidate);
    let documentation_insufficient = r.flag("documentation_insufficient");
    let suppress_locality = r.flag("suppress_locality");

    for (field, values) in [
        ("participants", &participants),
        ("partner_organizations", &partner_organizations),
    ] {
        if values.iter().any(|v| looks_like_email(v)) {
            r.errors.push(ValidationError::PersonalData { field });
        }
    }

    let precision = match r.text("precision") {
        None => Precision::None,
        Some(v) => v.parse().unwrap_or_else(|_| {
            r.errors.push(ValidationError::UnknownEnumValue { field: "precision", value: v });
            Precision::None
        }),
    };
    let lat = r.coordinate("latitude");
    let lon = r.coordinate("longitude");
    let anchor = match (precision, lat, lon) {
        (Precision::None, None, None) => LocationAnchor::Ungeocoded,
        (Precision::None, _, _) => {
            r.errors.push(ValidationError::CoordinatePrecisionMismatch(
                "precision none must not carry coordinates".into(),
            ));
            LocationAnchor::Ungeocoded
        }
        (p, Some(lat), Some(lon)) => match GeoPoint::new(lat, lon) {
            None => {
                let (field, value) = if (-90.0..=90.0).contains(&lat) {
                    ("longitude", lon)
                } else {
                    ("latitude", lat)
                };
                r.errors.push(ValidationError::CoordinateOutOfRange { field, value: value.to_string() });
                LocationAnchor::Ungeocoded
            }
            Some(point) if p == Precision::Locality => {
                if city.is_none() || country.is_empty() {
                    r.errors.push(ValidationError::CoordinatePrecisionMismatch(
                        "locality precision requires city and country".into(),
                    ));
                }
                LocationAnchor::Locality(point)
            }
            Some(point) => LocationAnchor::Country(point),
        },
        (p, _, _) => {
            r.errors.push(ValidationError::CoordinatePrecisionMismatch(format!(
                "precision {p} requires both latitude and longitude"
            )));
            LocationAnchor::Ungeocoded
        }
    };

    if !r.errors.is_empty() {
        return Err(ValidationErrors(r.errors));
    }

    Ok(ProjectRecord {
        id,
        canonical_name,
        dedup_key,
        alternate_links,
        provenance_url,
        source_url_2,
        source_url_3,
        official_url,
        country,
        city,
        region,
        lead_organization,
        organization_type,
        partner_organizations,
        activity_status,
        start_year,
        end_year,
        application_domain,
        domain_category,
        ai_modality,
        participation_tier,
        participants,
        participation_methods,
        lifecycle_stages,
        decision_points,
        mechanism,
        evidence_notes,
        verification_status,
        evidence_grade,
        review_status,
        documentation_insufficient,
        suppress_locality,
        anchor,
    })
}

/// The four elements a record needs to be interpretable as participatory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MvpdElement {
    Locus,
    Participants,
    DecisionPoints,
    Mechanism,
}

impl MvpdElement {
    pub const ALL: [MvpdElement; 4] = [
        MvpdElement::Locus,
        MvpdElement::Participants,
        MvpdElement::DecisionPoints,
        MvpdElement::Mechanism,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", content = "missing", rename_all = "snake_case")]
pub enum Mvpd {
    Pass,
    Insufficient(BTreeSet<MvpdElement>),
}

impl Mvpd {
    pub fn is_pass(&self) -> bool {
        matches!(self, Mvpd::Pass)
    }
}

/// Which of the four documentation elements are missing, without touching
/// the record.
pub fn mvpd_missing(record: &ProjectRecord) -> BTreeSet<MvpdElement> {
    let blank = |v: &[String]| v.iter().all(|s| s.trim().is_empty());
    let mut missing = BTreeSet::new();
    if record.lifecycle_stages.is_empty() {
        missing.insert(MvpdElement::Locus);
    }
    if blank(&record.participants) {
        missing.insert(MvpdElement::Participants);
    }
    if blank(&record.decision_points) {
        missing.insert(MvpdElement::DecisionPoints);
    }
    if record.mechanism.trim().is_empty() {
        missing.insert(MvpdElement::Mechanism);
    }
    missing
}

/// Evaluate the four-element documentation threshold and set
/// `documentation_insufficient` to match. No other field is written.
pub fn mvpd_check(record: &mut ProjectRecord) -> Mvpd {
    let missing = mvpd_missing(record);
    record.documentation_insufficient = !missing.is_empty();
    if missing.is_empty() {
        Mvpd::Pass
    } else {
        Mvpd::Insufficient(missing)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn masakhane_row() -> RawRecord {
        [
            ("canonical_name", "Masakhane"),
            ("provenance_url", "https://www.masakhane.io/"),
            ("source_url_2", "https://arxiv.org/abs/2010.02353"),
            ("official_url", "https://www.masakhane.io/"),
            ("country", "Global"),
            ("region", "global"),
            ("lead_organization", "Masakhane community"),
            ("organization_type", "grassroots research community"),
            ("activity_status", "active"),
            ("start_year", "2019"),
            ("application_domain", "natural language processing"),
            ("participation_tier", "community-led"),
            ("participants", "African NLP researchers; language communities"),
            ("participation_methods", "participatory research; open workshops"),
            ("lifecycle_stages", "problem formulation; data collection; evaluation"),
            ("decision_points", "which languages to prioritize"),
            ("mechanism", "community-governed research agenda"),
            ("verification_status", "live_verified"),
            ("evidence_grade", "A"),
            ("review_status", "core"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
    }

    #[test]
    fn fully_populated_row_validates() {
        let rec = validate_record(&masakhane_row()).unwrap();
        assert_eq!(rec.dedup_key, "masakhane");
        assert_eq!(rec.id, "masakhane-0001");
        assert_eq!(rec.lifecycle_stages.len(), 3);
        assert_eq!(rec.anchor, LocationAnchor::Ungeocoded);
    }

    #[test]
    fn empty_provenance_is_reported() {
        let mut row = masakhane_row();
        row.insert("provenance_url".into(), "   ".into());
        let errs = validate_record(&row).unwrap_err();
        assert_eq!(errs.0, vec![ValidationError::MissingRequiredField("provenance_url")]);
    }

    #[test]
    fn year_order_is_checked() {
        let mut row = masakhane_row();
        row.insert("start_year".into(), "2021".into());
        row.insert("end_year".into(), "2019".into());
        let errs = validate_record(&row).unwrap_err();
        assert_eq!(errs.0, vec![ValidationError::YearOrderViolation { start: 2021, end: 2019 }]);
    }

    #[test]
    fn all_violations_are_listed() {
        let mut row = masakhane_row();
        row.remove("provenance_url");
        row.remove("official_url");
        row.insert("participation_tier".into(), "crowd wisdom".into());
        row.insert("start_year".into(), "1850".into());
        let errs = validate_record(&row).unwrap_err();
        assert_eq!(errs.0.len(), 4, "{errs}");
        assert!(errs.0.contains(&ValidationError::UnknownEnumValue {
            field: "participation_tier",
            value: "crowd wisdom".into()
        }));
        assert!(errs.0.contains(&ValidationError::YearOutOfRange { field: "start_year", value: 1850 }));
    }

    #[test]
    fn coordinate_precision_rules() {
        let mut row = masakhane_row();
        row.insert("precision".into(), "locality".into());
        row.insert("latitude".into(), "1.0".into());
        row.insert("longitude".into(), "2.0".into());
        let errs = validate_record(&row).unwrap_err();
        assert!(matches!(errs.0[0], ValidationError::CoordinatePrecisionMismatch(_)));

        let mut row = masakhane_row();
        row.insert("latitude".into(), "1.0".into());
        let errs = validate_record(&row).unwrap_err();
        assert!(matches!(errs.0[0], ValidationError::CoordinatePrecisionMismatch(_)));

        let mut row = masakhane_row();
        row.insert("precision".into(), "country".into());
        row.insert("latitude".into(), "91".into());
        row.insert("longitude".into(), "2.0".into());
        let errs = validate_record(&row).unwrap_err();
        assert_eq!(
            errs.0,
            vec![ValidationError::CoordinateOutOfRange { field: "latitude", value: "91".into() }]
        );
    }

    #[test]
    fn personal_contact_data_is_rejected() {
        let mut row = masakhane_row();
        row.insert("participants".into(), "jane.doe@example.org; residents".into());
        let errs = validate_record(&row).unwrap_err();
        assert_eq!(errs.0, vec![ValidationError::PersonalData { field: "participants" }]);
    }

    #[test]
    fn id_scheme() {
        assert_eq!(slugify("masakhane nlp"), "masakhane-nlp");
        assert_eq!(slugify("te hiku média"), "te-hiku-media");
        assert_eq!(slugify("!!!"), "record");
        let long = "a ".repeat(60);
        assert!(slugify(&long).len() <= 48);
        assert_eq!(parse_id("masakhane-0001"), Some(("masakhane", 1)));
        assert_eq!(parse_id("masakhane-1"), None);
        assert_eq!(parse_id("Masakhane-0001"), None);
        let taken = ["ai-atlas-0001", "ai-atlas-0002"];
        assert_eq!(assign_id("ai atlas", |id| taken.contains(&id)), "ai-atlas-0003");

        let mut row = masakhane_row();
        row.insert("id".into(), "not an id".into());
        assert_eq!(
            validate_record(&row).unwrap_err().0,
            vec![ValidationError::InvalidId("not an id".into())]
        );
    }

    #[test]
    fn serialize_then_validate_is_stable() {
        let rec = validate_record(&masakhane_row()).unwrap();
        let again = validate_record(&rec.to_raw()).unwrap();
        assert_eq!(rec, again);
    }

    #[test]
    fn json_shape_is_flat() {
        let rec = validate_record(&masakhane_row()).unwrap();
        let v = serde_json::to_value(&rec).unwrap();
        assert_eq!(v["precision"], "none");
        assert!(v["latitude"].is_null());
        let back: ProjectRecord = serde_json::from_value(v).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn mvpd_four_elements() {
        let mut rec = validate_record(&masakhane_row()).unwrap();
        assert_eq!(mvpd_check(&mut rec), Mvpd::Pass);
        assert!(!rec.documentation_insufficient);

        rec.decision_points.clear();
        rec.mechanism = "  ".into();
        let before = rec.clone();
        let out = mvpd_check(&mut rec);
        assert_eq!(
            out,
            Mvpd::Insufficient([MvpdElement::DecisionPoints, MvpdElement::Mechanism].into())
        );
        assert!(rec.documentation_insufficient);
        assert_eq!(ProjectRecord { documentation_insufficient: false, ..rec }, before);
    }

    #[test]
    fn mvpd_register_case_passes() {
        let mut rec = validate_record(&masakhane_row()).unwrap();
        rec.lifecycle_stages = vec![LifecycleStage::Governance];
        rec.participants = vec!["city oversight board".into()];
        rec.decision_points = vec!["deployment conditions".into()];
        rec.mechanism = "register feedback channel".into();
        assert_eq!(mvpd_check(&mut rec), Mvpd::Pass);
    }
}
