use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use atlas_core::csvio::{read_table, write_table};
use atlas_core::fixtures::t2_rows;
use atlas_core::record::COLUMNS;
use atlas_core::{Atlas, Tables};
use atlas_service::{router, AppState, ServiceConfig};
use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use tempfile::TempDir;
use tower::ServiceExt;

fn atlas_cmd(data: Option<&Path>) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_atlas"));
    for var in ["ATLAS_DATA_DIR", "ATLAS_CONFIG", "ATLAS_GAZETTEER", "ATLAS_ALIASES", "ATLAS_REGIONS", "ATLAS_ADDR"] {
        c.env_remove(var);
    }
    c.env("ATLAS_LOG", "warn");
    if let Some(d) = data {
        c.arg("--data-dir").arg(d);
    }
    c
}

fn run(data: &Path, args: &[&str]) -> Output {
    atlas_cmd(Some(data)).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn t2_csv(dir: &Path, take: usize) -> PathBuf {
    let rows = t2_rows()
        .into_iter()
        .take(take)
        .map(|raw| COLUMNS.iter().map(|c| raw.get(*c).cloned().unwrap_or_default()).collect());
    let path = dir.join("t2.csv");
    std::fs::write(&path, write_table(COLUMNS, rows)).unwrap();
    path
}

/// Data directory with the T2 fixture imported and geocoded.
fn seeded(take: usize) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let csv = t2_csv(dir.path(), take);
    let o = run(dir.path(), &["import", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains(&format!("imported {take} rows: {take} added")), "{}", stdout(&o));
    let o = run(dir.path(), &["geocode"]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

#[test]
fn metrics_match_the_api_byte_for_byte() {
    let dir = seeded(131);
    let o = run(dir.path(), &["metrics"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let atlas = Atlas::load(dir.path(), Arc::new(Tables::default()), atlas_core::atlas::system_clock()).unwrap();
    let state = AppState::new(atlas, ServiceConfig::new(dir.path())).unwrap();
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let api = rt.block_on(async {
        let resp = router(state).oneshot(Request::get("/metrics").body(Body::empty()).unwrap()).await.unwrap();
        resp.into_body().collect().await.unwrap().to_bytes().to_vec()
    });
    assert_eq!(o.stdout, api);

    let out = dir.path().join("metrics.json");
    let o = run(dir.path(), &["metrics", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), api);
}

#[test]
fn second_cut_of_a_version_fails() {
    let dir = seeded(20);
    let o = run(dir.path(), &["release", "cut", "v2026.03"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("released v2026.03: 20 records"));
    let o = run(dir.path(), &["release", "cut", "v2026.03"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("v2026.03"), "{}", stderr(&o));
    let o = run(dir.path(), &["release", "cut", "march"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = run(dir.path(), &["release", "list"]);
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn invalid_rows_are_reported_by_line_and_nothing_is_written() {
    let dir = seeded(3);
    let before = std::fs::read(dir.path().join("working/records.csv")).unwrap();
    let bad = "canonical_name,provenance_url,official_url\nPlain Name,,https://example.org\n";
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, bad).unwrap();

    let o = run(dir.path(), &["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2: missing required field provenance_url"), "{}", stderr(&o));

    let o = run(dir.path(), &["import", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2:"));
    assert_eq!(std::fs::read(dir.path().join("working/records.csv")).unwrap(), before);

    let o = run(dir.path(), &["validate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "3 records valid");
}

#[test]
fn exit_codes_for_usage_and_io() {
    let o = atlas_cmd(None).args(["frobnicate"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = atlas_cmd(None).args(["metrics"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("no data directory"));

    let o = atlas_cmd(Some(Path::new("/no/such/atlas"))).args(["metrics"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing data directory path: /no/such/atlas"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--gazetteer", "/no/such/gazetteer.tsv", "metrics"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing gazetteer path"));
    let o = run(dir.path(), &["import", "/no/such/file.csv"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = atlas_cmd(None).arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn settings_precedence() {
    let flag_dir = seeded(2);
    let env_dir = seeded(4);
    let file_dir = seeded(6);
    let conf = file_dir.path().join("atlas.conf");
    std::fs::write(&conf, format!("# operator settings\ndata_dir = {}\n", file_dir.path().display())).unwrap();
    let count = |o: Output| -> String {
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o).trim().to_string()
    };

    // Config file alone.
    let o = atlas_cmd(None).args(["--config", conf.to_str().unwrap(), "validate"]).output().unwrap();
    assert_eq!(count(o), "6 records valid");
    // Environment beats the file.
    let o = atlas_cmd(None)
        .env("ATLAS_DATA_DIR", env_dir.path())
        .env("ATLAS_CONFIG", &conf)
        .arg("validate")
        .output()
        .unwrap();
    assert_eq!(count(o), "4 records valid");
    // Flag beats both.
    let o = atlas_cmd(Some(flag_dir.path()))
        .env("ATLAS_DATA_DIR", env_dir.path())
        .env("ATLAS_CONFIG", &conf)
        .arg("validate")
        .output()
        .unwrap();
    assert_eq!(count(o), "2 records valid");

    std::fs::write(&conf, "colour = red\n").unwrap();
    let o = atlas_cmd(Some(flag_dir.path())).args(["--config", conf.to_str().unwrap(), "validate"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn export_and_diff_between_releases() {
    let dir = seeded(12);
    let o = run(dir.path(), &["release", "cut", "v2026.03"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = run(dir.path(), &["export", "geojson"]);
    assert!(o.status.success());
    let fc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("releases/v2026.03/manifest.json")).unwrap()).unwrap();
    assert_eq!(fc["features"].as_array().unwrap().len() as u64, manifest["geocoded_count"].as_u64().unwrap());

    // Change one cell through a re-import of the restricted export.
    let o = run(dir.path(), &["export", "csv", "--restricted"]);
    let mut table = read_table(&o.stdout).unwrap();
    let id = table.keys().nth(4).unwrap().clone();
    table.get_mut(&id).unwrap().insert("lead_organization".into(), "Harbour Data Trust".into());
    let rows = table.values().map(|row| COLUMNS.iter().map(|c| row.get(*c).cloned().unwrap_or_default()).collect());
    let edited = dir.path().join("edited.csv");
    std::fs::write(&edited, write_table(COLUMNS, rows)).unwrap();
    let o = run(dir.path(), &["import", edited.to_str().unwrap(), "--reason", "lead organization renamed"]);
    assert!(stdout(&o).contains("1 updated, 11 unchanged"), "{} {}", stdout(&o), stderr(&o));

    let o = run(dir.path(), &["release", "cut", "v2026.04"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(dir.path(), &["diff", "v2026.03", "v2026.04"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains(&format!("modified  {id}  lead_organization")), "{out}");
    assert!(out.contains("0 added, 0 removed, 1 fields modified; all covered"), "{out}");
}
