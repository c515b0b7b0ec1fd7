//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may appear once.
//! Every key must be consumed by the command that reads the file; leftovers are
//! reported as unknown.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Parse(format!("config line {}: expected key = value", i + 1)))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Parse(format!("config line {}: empty key", i + 1)));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Parse(format!("config line {}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(Self {
            values,
            used: RefCell::default(),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Parse(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Parse(format!("config key '{key}': invalid value '{v}'")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        let item = item.trim();
                        item.parse()
                            .map_err(|_| CliError::Parse(format!("config key '{key}': invalid item '{item}'")))
                    })
                    .collect()
            })
            .transpose()
    }

    /// `on`/`off` (also `true`/`false`).
    pub fn switch(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some("on" | "true") => Ok(true),
            Some("off" | "false") => Ok(false),
            Some(v) => Err(CliError::Parse(format!("config key '{key}': expected on/off, got '{v}'"))),
        }
    }

    pub fn reject_unknown(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.values.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Parse(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }
}
