use std::collections::BTreeMap;

use atlas_core::fixtures::{t2_records, t2_rows, T2_PRESENT, T2_TOP_DOMAINS};
use atlas_core::metrics::{
    band_for_missing, field_completeness, missingness_band, provenance_domains, MissingnessBand, Percent,
    COMPLETENESS_FIELDS,
};
use proptest::prelude::*;

/// Half-up rounding to one decimal by long division.
fn oracle_percent(count: usize, total: usize) -> String {
    if total == 0 {
        return "0.0".into();
    }
    let scaled = count as u64 * 1000;
    let (mut q, r) = (scaled / total as u64, scaled % total as u64);
    if 2 * r >= total as u64 {
        q += 1;
    }
    format!("{}.{}", q / 10, q % 10)
}

/// Host of an http(s) URL without a leading `www.`.
fn oracle_domain(url: &str) -> String {
    let rest = url.split_once("://").unwrap().1;
    let host = rest.split(['/', '?', '#', ':']).next().unwrap().to_lowercase();
    host.strip_prefix("www.").map(str::to_string).unwrap_or(host)
}

#[test]
fn t2_completeness_matches_raw_counts() {
    let rows = t2_rows();
    let report = field_completeness(&t2_records(), COMPLETENESS_FIELDS).unwrap();
    assert_eq!(report.total, 131);
    for (field, expected) in T2_PRESENT {
        let counted = rows.iter().filter(|r| r.get(field).is_some_and(|v| !v.trim().is_empty())).count();
        assert_eq!(counted, expected, "{field}");
        let fc = report.get(field).unwrap();
        assert_eq!(fc.present_count, expected);
        assert_eq!(fc.percent.to_string(), oracle_percent(expected, 131), "{field}");
    }
}

#[test]
fn banding_boundaries() {
    let p = |s: f64| Percent::from_f64(s).unwrap();
    assert_eq!(band_for_missing(p(29.9)), MissingnessBand::Low);
    assert_eq!(band_for_missing(p(30.0)), MissingnessBand::Medium);
    assert_eq!(band_for_missing(p(70.0)), MissingnessBand::Medium);
    assert_eq!(band_for_missing(p(70.1)), MissingnessBand::High);
    assert_eq!(missingness_band(22.1).unwrap(), MissingnessBand::High);
    assert_eq!(missingness_band(72.5).unwrap(), MissingnessBand::Low);
    assert_eq!(missingness_band(85.5).unwrap(), MissingnessBand::Low);
    assert!(missingness_band(100.1).is_err());
    assert!(missingness_band(-0.1).is_err());
}

#[test]
fn domain_ranking_matches_brute_force() {
    let records = t2_records();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &records {
        *counts.entry(oracle_domain(&r.provenance_url)).or_default() += 1;
    }
    let mut oracle: Vec<(String, usize)> = counts.into_iter().collect();
    oracle.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let report = provenance_domains(&records);
    let got: Vec<(String, usize)> = report.domains.iter().map(|d| (d.label.clone(), d.count)).collect();
    assert_eq!(got, oracle);
    let top: Vec<(&str, usize)> = report.top(10).iter().map(|d| (d.label.as_str(), d.count)).collect();
    assert_eq!(top, T2_TOP_DOMAINS.to_vec());
    assert!(report.malformed.is_empty());
}

proptest! {
    #[test]
    fn percent_matches_oracle(total in 1usize..5000, frac in 0.0f64..=1.0) {
        let count = ((total as f64) * frac).floor() as usize;
        prop_assert_eq!(Percent::of(count, total).to_string(), oracle_percent(count, total));
    }

    #[test]
    fn bands_partition_the_scale(tenths in 0u32..=1000) {
        let band = band_for_missing(Percent::from_tenths(tenths).unwrap());
        let expected = if tenths < 300 {
            MissingnessBand::Low
        } else if tenths <= 700 {
            MissingnessBand::Medium
        } else {
            MissingnessBand::High
        };
        prop_assert_eq!(band, expected);
    }
}
