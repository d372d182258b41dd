//! Plain `key=value` configuration files. Keys use the long flag names
//! (`sym-div`, `w-floor`, ...); underscores are accepted in place of dashes.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every key a configuration file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "arl",
    "arls",
    "delta0",
    "detector",
    "drift",
    "glr-lookback",
    "glr-min-segment",
    "horizon",
    "input",
    "mean0",
    "mean1",
    "output",
    "seed",
    "study",
    "sym-div",
    "threshold",
    "thresholds",
    "trials",
    "tsv",
    "var0",
    "var1",
    "w-floor",
    "w-max",
    "window",
    "windows",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    /// key -> (value, 1-based line number)
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse { line: i + 1, message: format!("expected key=value, got '{line}'") });
            };
            let key = k.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Parse { line: i + 1, message: format!("unknown key '{key}'") });
            }
            entries.insert(key, (v.trim().to_string(), i + 1));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Parse { line: *line, message: format!("{key}: {e}") }),
        }
    }

    /// Flag value if given, otherwise the file value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// Boolean switches: set by the flag or by a truthy file value.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}
