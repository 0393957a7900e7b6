//! Flat key-value configuration files.
//!
//! One `key = value` per line, `#` starts a comment, and a `[section]` line
//! prefixes the following keys with `section.`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut section = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = if name.trim().is_empty() { String::new() } else { format!("{}.", name.trim()) };
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{line}`", k + 1)))?;
            map.insert(format!("{section}{}", key.trim()), value.trim().to_string());
        }
        Ok(Self { map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.map.get(key).map(|v| v.parse::<T>().map_err(|e| Error::Config(format!("`{key} = {v}`: {e}")))).transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.map
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("`{key}` entry `{s}`: {e}"))))
                    .collect()
            })
            .transpose()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    /// Rejects keys outside `allowed`, naming the schema.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        let unknown: Vec<&str> = self.keys().filter(|k| !allowed.contains(k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown keys {unknown:?}; accepted keys: {}", allowed.join(", "))))
        }
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.map {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_lists() {
        let c = Config::parse("regime = fast # comment\n[limit]\nprobes = 0.05, 0.1\n\n[]\nseed=7").unwrap();
        assert_eq!(c.get_str("regime"), Some("fast"));
        assert_eq!(c.get_list("limit.probes").unwrap(), Some(vec![0.05, 0.1]));
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(7));
        assert!(Config::parse("no equals sign").is_err());
        assert!(c.check_keys(&["regime", "seed"]).is_err());
        assert_eq!(Config::parse(&c.to_string()).unwrap(), c);
    }
}
