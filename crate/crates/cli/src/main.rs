//! `atlas`: operator tooling for the registry working set and releases.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 I/O, 3 usage.

mod config;

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use atlas_core::csvio::{read_rows, validate_rows, CsvError, HeaderAliases, RowError};
use atlas_core::release::{diff_releases, uncovered_changes, ReleaseError};
use atlas_core::{Atlas, AtlasError, ExportFormat, ReleaseVersion, ValidationErrors};
use atlas_service::{AppState, ServiceConfig};
use clap::{Parser, Subcommand, ValueEnum};

use config::{CliConfig, MissingPath, Overrides, UsageError};

#[derive(Debug, Parser)]
#[command(name = "atlas", version, about = "Curate, publish and serve the participatory-AI project atlas")]
struct Cli {
    /// Directory holding the working set and releases.
    #[arg(long, global = true, env = "ATLAS_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Gazetteer TSV replacing the bundled one.
    #[arg(long, global = true, env = "ATLAS_GAZETTEER")]
    gazetteer: Option<PathBuf>,
    /// Country alias TSV replacing the bundled one.
    #[arg(long, global = true, env = "ATLAS_ALIASES")]
    aliases: Option<PathBuf>,
    /// Country-to-region TSV replacing the bundled one.
    #[arg(long, global = true, env = "ATLAS_REGIONS")]
    regions: Option<PathBuf>,
    /// key=value file consulted for settings not given as flags or environment.
    #[arg(long, global = true, env = "ATLAS_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load records from a CSV file. Nothing is written if any row fails.
    Import {
        csv: PathBuf,
        #[arg(long, default_value = "bulk import")]
        reason: String,
        #[arg(long, default_value = "curator")]
        contributor: String,
    },
    /// Check a CSV file, or the working set when no file is given.
    Validate { csv: Option<PathBuf> },
    /// Normalize countries and regions and merge duplicate records.
    Harmonize {
        #[arg(long, default_value = "harmonization pass")]
        reason: String,
        #[arg(long, default_value = "curator")]
        contributor: String,
    },
    /// Resolve location anchors against the gazetteer.
    Geocode {
        #[arg(long, default_value = "geocoding pass")]
        reason: String,
        #[arg(long, default_value = "curator")]
        contributor: String,
    },
    /// Print metrics.json for the working set.
    Metrics {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Release(ReleaseCommand),
    /// Write the working set in one format. Public unless --restricted.
    Export {
        format: Format,
        #[arg(long)]
        restricted: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two releases and check every difference against the change log.
    Diff { from: String, to: String },
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "ATLAS_ADDR")]
        addr: Option<String>,
        /// Environment variable holding the curator bearer token.
        #[arg(long, env = "ATLAS_TOKEN_ENV")]
        token_env: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum ReleaseCommand {
    /// Publish the working set as an immutable release.
    Cut { version: String },
    /// List published releases.
    List,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Geojson,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ExportFormat::Csv,
            Format::Json => ExportFormat::Json,
            Format::Geojson => ExportFormat::GeoJson,
        }
    }
}

/// Validation failure already reported on stderr.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Invalid>() || cause.is::<CsvError>() {
            return 1;
        }
        if cause.is::<UsageError>() {
            return 3;
        }
        if cause.is::<MissingPath>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<AtlasError>() {
            return match e {
                AtlasError::Io(_) | AtlasError::Json { .. } | AtlasError::ChangeLog(_) => 2,
                AtlasError::Release(ReleaseError::Io(_) | ReleaseError::Manifest(_)) => 2,
                AtlasError::Release(ReleaseError::InvalidVersion(_)) => 3,
                AtlasError::UnknownField(_) | AtlasError::ProtectedField(_) => 3,
                _ => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<ReleaseError>() {
            return match e {
                ReleaseError::Io(_) | ReleaseError::Manifest(_) => 2,
                ReleaseError::InvalidVersion(_) => 3,
                _ => 1,
            };
        }
    }
    2
}

fn report_rows(errors: &[RowError]) -> Invalid {
    let mut err = std::io::stderr().lock();
    for row in errors {
        for e in &row.errors.0 {
            let _ = writeln!(err, "line {}: {e}", row.line);
        }
    }
    Invalid(format!("{} row(s) failed validation", errors.len()))
}

fn report_records(invalid: &[(String, ValidationErrors)]) -> Invalid {
    let mut err = std::io::stderr().lock();
    for (id, errs) in invalid {
        for e in &errs.0 {
            let _ = writeln!(err, "{id}: {e}");
        }
    }
    Invalid(format!("{} record(s) failed validation", invalid.len()))
}

/// Turn row and record validation failures into a printed report.
fn reported(e: AtlasError) -> anyhow::Error {
    match e {
        AtlasError::Rows(rows) => report_rows(&rows).into(),
        AtlasError::ValidationFailure(errs) => report_records(&[("record".to_string(), errs)]).into(),
        AtlasError::Release(ReleaseError::ValidationFailure(list)) => report_records(&list).into(),
        other => other.into(),
    }
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().lock().write_all(bytes).context("writing to stdout"),
    }
}

fn read_csv(path: &Path) -> Result<atlas_core::csvio::CsvRows> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = read_rows(&bytes[..], &HeaderAliases::default()).with_context(|| format!("parsing {}", path.display()))?;
    for h in &rows.ignored_headers {
        eprintln!("warning: ignoring unrecognised column {h:?}");
    }
    Ok(rows)
}

fn run(cli: Cli) -> Result<()> {
    let (addr_flag, token_flag) = match &cli.command {
        Command::Serve { addr, token_env } => (addr.clone(), token_env.clone()),
        _ => (None, None),
    };
    let over = Overrides {
        data_dir: cli.data_dir,
        gazetteer: cli.gazetteer,
        aliases: cli.aliases,
        regions: cli.regions,
        addr: addr_flag,
        token_env: token_flag,
    };
    let cfg = CliConfig::resolve(over, cli.config.as_deref())?;
    let tables = cfg.tables()?;
    let mut atlas = Atlas::load(&cfg.data_dir, tables, atlas_core::atlas::system_clock())?;

    match cli.command {
        Command::Import { csv, reason, contributor } => {
            let rows = read_csv(&csv)?;
            let s = atlas.import_rows(&rows.rows, &reason, &contributor).map_err(reported)?;
            atlas.save(&cfg.data_dir)?;
            println!(
                "imported {} rows: {} added, {} updated, {} unchanged",
                rows.rows.len(),
                s.added.len(),
                s.updated.len(),
                s.unchanged
            );
        }
        Command::Validate { csv: Some(csv) } => {
            let rows = read_csv(&csv)?;
            let records = validate_rows(&rows.rows).map_err(|errs| report_rows(&errs))?;
            println!("{} rows valid", records.len());
        }
        Command::Validate { csv: None } => {
            let invalid = atlas.validate_all();
            if !invalid.is_empty() {
                return Err(report_records(&invalid).into());
            }
            println!("{} records valid", atlas.len());
        }
        Command::Harmonize { reason, contributor } => {
            let r = atlas.harmonize(&reason, &contributor).map_err(reported)?;
            atlas.save(&cfg.data_dir)?;
            for (id, w) in &r.warnings {
                eprintln!("warning: {id}: {}", serde_json::to_string(w)?);
            }
            for m in &r.merges {
                println!("merged {} into {}", m.absorbed_ids.join(", "), m.survivor_id);
            }
            println!(
                "{} countries normalized, {} regions remapped, {} merges",
                r.countries_normalized,
                r.regions_remapped,
                r.merges.len()
            );
        }
        Command::Geocode { reason, contributor } => {
            let r = atlas.geocode_all(&reason, &contributor).map_err(reported)?;
            atlas.save(&cfg.data_dir)?;
            for (id, w) in &r.warnings {
                eprintln!("warning: {id}: {}", serde_json::to_string(w)?);
            }
            println!("{} geocoded, {} ungeocoded, {} anchors changed", r.geocoded, r.ungeocoded, r.changed);
        }
        Command::Metrics { out } => {
            write_out(out.as_deref(), atlas.metrics().to_json().as_bytes())?;
        }
        Command::Release(ReleaseCommand::Cut { version }) => {
            let store = Atlas::release_store(&cfg.data_dir)?;
            let m = atlas.cut_release(&store, &version).map_err(reported)?;
            atlas.save(&cfg.data_dir)?;
            println!(
                "released {}: {} records, {} geocoded, change log {}..{}",
                m.version, m.record_count, m.geocoded_count, m.changelog_range.first, m.changelog_range.last
            );
            for a in &m.artifacts {
                println!("  {}  {}  {} bytes", a.sha256, a.name, a.bytes);
            }
        }
        Command::Release(ReleaseCommand::List) => {
            let store = Atlas::release_store(&cfg.data_dir)?;
            for v in store.list()? {
                let m = store.manifest(&v)?;
                println!("{}  {} records  schema {}", m.version, m.record_count, m.schema_version);
            }
        }
        Command::Export { format, restricted, out } => {
            write_out(out.as_deref(), &atlas.export(format.into(), restricted))?;
        }
        Command::Diff { from, to } => {
            let parse = |v: &str| v.parse::<ReleaseVersion>().map_err(ReleaseError::from);
            let (a, b) = (parse(&from)?, parse(&to)?);
            let store = Atlas::release_store(&cfg.data_dir)?;
            let diff = diff_releases(&store, &a, &b)?;
            for id in &diff.added {
                println!("added     {id}");
            }
            for id in &diff.removed {
                println!("removed   {id}");
            }
            for (id, field) in &diff.modified {
                println!("modified  {id}  {field}");
            }
            let (ma, mb) = (store.manifest(&a)?, store.manifest(&b)?);
            let (first, last) = if a <= b {
                (ma.changelog_range.last + 1, mb.changelog_range.last)
            } else {
                (mb.changelog_range.last + 1, ma.changelog_range.last)
            };
            let uncovered = uncovered_changes(&diff, atlas.changelog().range(first, last));
            for u in &uncovered {
                eprintln!("uncovered: {}", serde_json::to_string(u)?);
            }
            if !uncovered.is_empty() {
                return Err(Invalid(format!("{} difference(s) have no change-log entry", uncovered.len())).into());
            }
            println!(
                "{} added, {} removed, {} fields modified; all covered by change log {first}..{last}",
                diff.added.len(),
                diff.removed.len(),
                diff.modified.len()
            );
        }
        Command::Serve { .. } => {
            let addr: SocketAddr =
                cfg.addr.parse().map_err(|e| UsageError(format!("invalid address {:?}: {e}", cfg.addr)))?;
            let mut service = ServiceConfig::new(&cfg.data_dir);
            match std::env::var(&cfg.token_env) {
                Ok(t) if !t.trim().is_empty() => service = service.with_token(t.trim()),
                _ => eprintln!("warning: {} is not set; moderation routes will refuse every request", cfg.token_env),
            }
            let state = AppState::new(atlas, service)?;
            let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
            rt.block_on(atlas_service::serve(addr, state)).with_context(|| format!("serving on {addr}"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("ATLAS_LOG").unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
