//! Synthetic corpora for tests, benchmarks and demos.
//!
//! `t2_records` is a 131-record set whose field presence counts and
//! provenance domains are fixed. `random_record` draws records that are
//! valid and survive CSV round-trips.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::harmonize::normalize_name;
use crate::record::{format_id, slugify, GeoPoint, LocationAnchor, ProjectRecord, RawRecord};
use crate::schema::{Grade, LifecycleStage, Region, Review, Status, Tier, Verification};

pub const T2_SIZE: usize = 131;

/// Records carrying each completeness field in the T2 set.
pub const T2_PRESENT: [(&str, usize); 9] = [
    ("city", 130),
    ("lead_organization", 131),
    ("provenance_url", 131),
    ("official_url", 131),
    ("source_url_2", 131),
    ("source_url_3", 112),
    ("partner_organizations", 95),
    ("start_year", 131),
    ("end_year", 29),
];

/// Most frequent provenance domains of the T2 set, with counts. All other
/// records use a domain of their own.
pub const T2_TOP_DOMAINS: [(&str, usize); 10] = [
    ("aplusalliance.org", 5),
    ("dl.acm.org", 5),
    ("masakhane.io", 5),
    ("mila.quebec", 4),
    ("moda.gov.tw", 3),
    ("nesta.org.uk", 3),
    ("arxiv.org", 2),
    ("cdacnetwork.org", 2),
    ("cndp.us", 2),
    ("openforgood.info", 2),
];

/// `(country, city, region)` triples known to the bundled gazetteer.
const PLACES: &[(&str, &str, Region)] = &[
    ("Kenya", "Nairobi", Region::Africa),
    ("Nigeria", "Lagos", Region::Africa),
    ("South Africa", "Cape Town", Region::Africa),
    ("Ghana", "Accra", Region::Africa),
    ("Uganda", "Kampala", Region::Africa),
    ("Rwanda", "Kigali", Region::Africa),
    ("Senegal", "Dakar", Region::Africa),
    ("India", "Bengaluru", Region::Asia),
    ("India", "New Delhi", Region::Asia),
    ("Taiwan", "Taipei", Region::Asia),
    ("Japan", "Tokyo", Region::Asia),
    ("South Korea", "Seoul", Region::Asia),
    ("Bangladesh", "Dhaka", Region::Asia),
    ("Indonesia", "Jakarta", Region::Asia),
    ("United Kingdom", "London", Region::Europe),
    ("United Kingdom", "Edinburgh", Region::Europe),
    ("Finland", "Helsinki", Region::Europe),
    ("Netherlands", "Amsterdam", Region::Europe),
    ("Germany", "Berlin", Region::Europe),
    ("France", "Paris", Region::Europe),
    ("Spain", "Barcelona", Region::Europe),
    ("Estonia", "Tallinn", Region::Europe),
    ("Denmark", "Copenhagen", Region::Europe),
    ("Switzerland", "Zürich", Region::Europe),
    ("Brazil", "São Paulo", Region::LatinAmerica),
    ("Mexico", "Mexico City", Region::LatinAmerica),
    ("Argentina", "Buenos Aires", Region::LatinAmerica),
    ("Chile", "Santiago", Region::LatinAmerica),
    ("Colombia", "Bogotá", Region::LatinAmerica),
    ("Uruguay", "Montevideo", Region::LatinAmerica),
    ("United States", "New York", Region::NorthAmerica),
    ("United States", "Pittsburgh", Region::NorthAmerica),
    ("Canada", "Montreal", Region::NorthAmerica),
    ("Canada", "Toronto", Region::NorthAmerica),
    ("Australia", "Sydney", Region::Oceania),
    ("New Zealand", "Wellington", Region::Oceania),
];

const SUFFIXES: &[&str] = &["org", "net", "edu", "gov", "io", "ai", "eu", "info"];

fn t2_domain(i: usize) -> String {
    // Spread the shared domains across the set instead of the first rows.
    let slot = (i * 37) % T2_SIZE;
    let mut acc = 0;
    for (domain, count) in T2_TOP_DOMAINS {
        if slot < acc + count {
            return domain.to_string();
        }
        acc += count;
    }
    format!("initiative{slot:03}.example.{}", SUFFIXES[slot % SUFFIXES.len()])
}

/// The 131-record completeness fixture as raw CSV-style rows.
pub fn t2_rows() -> Vec<RawRecord> {
    (0..T2_SIZE).map(t2_row).collect()
}

fn t2_row(i: usize) -> RawRecord {
    let mut row = RawRecord::new();
    let mut set = |k: &str, v: String| {
        row.insert(k.to_string(), v);
    };
    let name = format!("Participatory AI Initiative {:03}", i + 1);
    let domain = t2_domain(i);
    let www = if i.is_multiple_of(3) { "www." } else { "" };
    set("canonical_name", name);
    set("provenance_url", format!("https://{www}{domain}/records/{}", i + 1));
    set("source_url_2", format!("https://doi.example.org/10.5555/{}", 1000 + i));
    if i < 112 {
        set("source_url_3", format!("https://news.example.com/story/{}", i + 1));
    }
    set("official_url", format!("https://site{:03}.example.org/", i + 1));
    if i == T2_SIZE - 1 {
        set("country", "Global".into());
        set("region", Region::Global.token().into());
    } else {
        let (country, city, region) = PLACES[i % PLACES.len()];
        set("country", country.into());
        set("city", city.into());
        set("region", region.token().into());
    }
    set("lead_organization", format!("Lead Organization {}", i + 1));
    set("organization_type", ["civil society", "university", "public agency", "company"][i % 4].into());
    if i >= T2_SIZE - 95 {
        set("partner_organizations", format!("Partner {}a; Partner {}b", i + 1, i + 1));
    }
    set("activity_status", Status::ALL[i % Status::ALL.len()].token().into());
    let start = 2010 + (i % 14) as i32;
    set("start_year", start.to_string());
    if i.is_multiple_of(4) && i <= 112 {
        set("end_year", (start + 2).to_string());
    }
    set("application_domain", ["health", "public services", "language technology", "urban planning", "agriculture"][i % 5].into());
    set("participation_tier", Tier::ALL[i % Tier::ALL.len()].token().into());
    set("participants", "residents; community organizers".into());
    set("participation_methods", "workshops; deliberative panels".into());
    let stages = [LifecycleStage::ALL[i % 8], LifecycleStage::ALL[(i + 3) % 8]];
    set("lifecycle_stages", format!("{}; {}", stages[0].token(), stages[1].token()));
    set("decision_points", "deployment conditions".into());
    set("mechanism", "public feedback register".into());
    set("verification_status", Verification::ALL[i % 4].token().into());
    set("evidence_grade", Grade::ALL[i % 3].token().into());
    set("review_status", Review::ALL[i % 3].token().into());
    row
}

/// The T2 rows validated into records, ids assigned and anchors resolved
/// against the bundled gazetteer.
pub fn t2_records() -> Vec<ProjectRecord> {
    let gazetteer = crate::geocode::Gazetteer::builtin();
    t2_rows()
        .iter()
        .map(|raw| {
            let mut r = crate::record::validate_record(raw).expect("fixture rows are valid");
            r.anchor = crate::geocode::resolve_record(&r, &gazetteer).anchor;
            r
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WORDS: &[&str] = &[
    "atlas", "civic", "data", "commons", "Ñandú", "Zürich", "São", "东京", "forum", "panel", "O'Neil", "co-op",
    "lab", "council", "voices", "AI", "\"quoted\"", "a,b", "røde", "जन", "model", "audit", "Ωmega",
];

fn words(rng: &mut impl Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

fn maybe_text(rng: &mut impl Rng) -> String {
    if rng.gen_bool(0.3) {
        String::new()
    } else {
        let mut s = words(rng, 1, 4);
        if rng.gen_bool(0.1) {
            s.push_str("\nsecond line");
        }
        s
    }
}

fn url(rng: &mut impl Rng) -> String {
    let host: u32 = rng.gen_range(0..400);
    let suffix = SUFFIXES.choose(rng).expect("non-empty");
    format!("https://host{host}.example.{suffix}/p/{}", rng.gen_range(0..10_000))
}

fn list(rng: &mut impl Rng, min: usize, max: usize) -> Vec<String> {
    (0..rng.gen_range(min..=max)).map(|_| words(rng, 1, 3)).collect()
}

fn pick<T: Copy>(rng: &mut impl Rng, all: &[T]) -> T {
    *all.choose(rng).expect("non-empty")
}

/// A random record that passes validation and round-trips through CSV.
/// `serial` keeps names (and so ids) distinct.
pub fn random_record(rng: &mut impl Rng, serial: usize) -> ProjectRecord {
    let canonical_name = format!("{} {serial}", words(rng, 1, 3));
    let dedup_key = normalize_name(&canonical_name).expect("names contain letters");
    let id = format_id(&slugify(&dedup_key), rng.gen_range(1..=9));
    let start_year = rng.gen_bool(0.8).then(|| rng.gen_range(1990..=2025));
    let end_year = match start_year {
        Some(s) if rng.gen_bool(0.3) => Some(rng.gen_range(s..=2030)),
        None if rng.gen_bool(0.1) => Some(rng.gen_range(1990..=2030)),
        _ => None,
    };
    let mut stages: Vec<LifecycleStage> = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let s = pick(rng, LifecycleStage::ALL);
        if !stages.contains(&s) {
            stages.push(s);
        }
    }
    let (country, city, region) = if rng.gen_bool(0.1) {
        ("Global".to_string(), None, Region::Global)
    } else {
        let (c, city, r) = pick(rng, PLACES);
        (c.to_string(), rng.gen_bool(0.8).then(|| city.to_string()), r)
    };
    let point = || GeoPoint::new(0.0, 0.0).expect("origin is valid");
    let anchor = match rng.gen_range(0..3) {
        0 if city.is_some() => {
            LocationAnchor::Locality(GeoPoint::new(rng.gen_range(-90.0..=90.0), rng.gen_range(-180.0..=180.0)).unwrap_or_else(point))
        }
        1 => LocationAnchor::Country(GeoPoint::new(rng.gen_range(-90.0..=90.0), rng.gen_range(-180.0..=180.0)).unwrap_or_else(point)),
        _ => LocationAnchor::Ungeocoded,
    };
    ProjectRecord {
        id,
        canonical_name,
        dedup_key,
        alternate_links: (0..rng.gen_range(0..=2)).map(|_| url(rng)).collect(),
        provenance_url: url(rng),
        source_url_2: rng.gen_bool(0.7).then(|| url(rng)),
        source_url_3: rng.gen_bool(0.4).then(|| url(rng)),
        official_url: url(rng),
        country,
        city,
        region,
        lead_organization: words(rng, 1, 3),
        organization_type: maybe_text(rng),
        partner_organizations: list(rng, 0, 3),
        activity_status: pick(rng, Status::ALL),
        start_year,
        end_year,
        application_domain: maybe_text(rng),
        domain_category: maybe_text(rng),
        ai_modality: maybe_text(rng),
        participation_tier: pick(rng, Tier::ALL),
        participants: list(rng, 1, 3),
        participation_methods: list(rng, 1, 3),
        lifecycle_stages: stages,
        decision_points: list(rng, 0, 2),
        mechanism: maybe_text(rng),
        evidence_notes: maybe_text(rng),
        verification_status: pick(rng, Verification::ALL),
        evidence_grade: pick(rng, Grade::ALL),
        review_status: pick(rng, Review::ALL),
        documentation_insufficient: rng.gen_bool(0.5),
        suppress_locality: rng.gen_bool(0.2),
        anchor,
    }
}

/// `n` random records with pairwise distinct ids.
pub fn random_records(seed: u64, n: usize) -> Vec<ProjectRecord> {
    let mut rng = rng(seed);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut serial = 0;
    while out.len() < n {
        let r = random_record(&mut rng, serial);
        serial += 1;
        if seen.insert(r.id.clone()) {
            out.push(r);
        }
    }
    out
}
