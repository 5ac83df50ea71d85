//! Resolved operator settings.
//!
//! Flags win over `ATLAS_*` variables (both handled by clap), and either
//! wins over the `key=value` config file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use atlas_core::geocode::Gazetteer;
use atlas_core::harmonize::{CountryAliasTable, RegionTable};
use atlas_core::Tables;

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_TOKEN_ENV: &str = "ATLAS_CURATOR_TOKEN";

const KEYS: &[&str] = &["data_dir", "gazetteer", "aliases", "regions", "addr", "token_env"];

/// A configured path that does not exist.
#[derive(Debug)]
pub struct MissingPath {
    pub name: &'static str,
    pub path: PathBuf,
}

impl fmt::Display for MissingPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing {} path: {}", self.name, self.path.display())
    }
}

impl std::error::Error for MissingPath {}

/// Bad invocation or configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Values as given on the command line or in the environment.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub regions: Option<PathBuf>,
    pub addr: Option<String>,
    pub token_env: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub data_dir: PathBuf,
    pub gazetteer: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub regions: Option<PathBuf>,
    pub addr: String,
    pub token_env: String,
}

/// Parse `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(UsageError(format!("config line {}: unknown key {k:?}", i + 1)));
        }
        out.insert(k, v.trim().trim_matches('"').to_string());
    }
    Ok(out)
}

fn existing(name: &'static str, path: PathBuf) -> Result<PathBuf, MissingPath> {
    if path.exists() {
        Ok(path)
    } else {
        Err(MissingPath { name, path })
    }
}

impl CliConfig {
    /// Merge overrides with the config file and check that every path exists.
    pub fn resolve(over: Overrides, file: Option<&Path>) -> anyhow::Result<Self> {
        let mut from_file = BTreeMap::new();
        if let Some(path) = file {
            let path = existing("config file", path.to_path_buf())?;
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            from_file = parse_config_file(&text)?;
        }
        let mut take = |key: &str| from_file.remove(key);
        let data_dir = over.data_dir.or_else(|| take("data_dir").map(PathBuf::from)).ok_or_else(|| {
            UsageError("no data directory: pass --data-dir, set ATLAS_DATA_DIR or add data_dir to the config file".into())
        })?;
        let gazetteer = over.gazetteer.or_else(|| take("gazetteer").map(PathBuf::from));
        let aliases = over.aliases.or_else(|| take("aliases").map(PathBuf::from));
        let regions = over.regions.or_else(|| take("regions").map(PathBuf::from));
        let addr = over.addr.or_else(|| take("addr")).unwrap_or_else(|| DEFAULT_ADDR.to_string());
        let token_env = over.token_env.or_else(|| take("token_env")).unwrap_or_else(|| DEFAULT_TOKEN_ENV.to_string());
        Ok(CliConfig {
            data_dir: existing("data directory", data_dir)?,
            gazetteer: gazetteer.map(|p| existing("gazetteer", p)).transpose()?,
            aliases: aliases.map(|p| existing("country alias table", p)).transpose()?,
            regions: regions.map(|p| existing("region table", p)).transpose()?,
            addr,
            token_env,
        })
    }

    /// Reference tables, with bundled defaults for any path not given.
    pub fn tables(&self) -> anyhow::Result<Arc<Tables>> {
        let read = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
        let mut t = Tables::default();
        if let Some(p) = &self.gazetteer {
            t.gazetteer = Gazetteer::from_tsv(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
        }
        if let Some(p) = &self.aliases {
            t.aliases = CountryAliasTable::from_tsv(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
        }
        if let Some(p) = &self.regions {
            t.regions = RegionTable::from_tsv(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
        }
        Ok(Arc::new(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_syntax() {
        let m = parse_config_file("# comment\n\ndata-dir = /srv/atlas\naddr=\"0.0.0.0:80\"\n").unwrap();
        assert_eq!(m["data_dir"], "/srv/atlas");
        assert_eq!(m["addr"], "0.0.0.0:80");
        assert!(parse_config_file("colour=red").is_err());
        assert!(parse_config_file("just words").is_err());
    }

    #[test]
    fn flags_beat_file() {
        let dir = tempfile::tempdir().unwrap();
        let other = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("atlas.conf");
        std::fs::write(&cfg, format!("data_dir={}\naddr=10.0.0.1:1\n", other.path().display())).unwrap();
        let over = Overrides { data_dir: Some(dir.path().into()), ..Default::default() };
        let c = CliConfig::resolve(over, Some(&cfg)).unwrap();
        assert_eq!(c.data_dir, dir.path());
        assert_eq!(c.addr, "10.0.0.1:1");
        assert_eq!(c.token_env, DEFAULT_TOKEN_ENV);
    }

    #[test]
    fn missing_paths_are_named() {
        let over = Overrides { data_dir: Some("/definitely/not/here".into()), ..Default::default() };
        let err = CliConfig::resolve(over, None).unwrap_err();
        assert_eq!(err.to_string(), "missing data directory path: /definitely/not/here");
    }
}
