//! Flat `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Keys are case-sensitive; `-` and `_` are interchangeable.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValueConfig {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl KeyValueConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
                what: "config file",
                detail: format!("line {}: expected key = value", n + 1),
            })?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(Error::Format {
                    what: "config file",
                    detail: format!("line {}: empty key", n + 1),
                });
            }
            if entries.insert(key.clone(), value.trim().to_owned()).is_some() {
                return Err(Error::Format {
                    what: "config file",
                    detail: format!("line {}: duplicate key {key:?}", n + 1),
                });
            }
        }
        Ok(KeyValueConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(&normalize(key)) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| Error::Format {
                what: "config file",
                detail: format!("{key} = {raw:?}: {e}"),
            }),
        }
    }

    /// Fails on any key outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            None => Ok(()),
            Some(k) => Err(Error::Format {
                what: "config file",
                detail: format!("unknown key {k:?}"),
            }),
        }
    }
}
