//! Flat `key = value` text format shared by surface files and run configs.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct KvError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    /// Parses `key = value` lines. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(KvError { line: i + 1, message: format!("expected `key = value`, got {line:?}") });
            };
            let key = k.trim();
            if key.is_empty() {
                return Err(KvError { line: i + 1, message: "empty key".into() });
            }
            if entries.insert(key.to_string(), v.trim().to_string()).is_some() {
                return Err(KvError { line: i + 1, message: format!("duplicate key {key:?}") });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, KvError> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| KvError { line: 0, message: format!("{key}: not a number: {v:?}") }))
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, KvError> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| KvError { line: 0, message: format!("{key}: not an unsigned integer: {v:?}") })
            })
            .transpose()
    }

    /// Comma or whitespace separated list of reals.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, KvError> {
        self.get(key)
            .map(|v| parse_f64_list(v).map_err(|m| KvError { line: 0, message: format!("{key}: {m}") }))
            .transpose()
    }
}

pub fn parse_f64_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect()
}

impl fmt::Display for KvMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let m = KvMap::parse("# c\n\nradius = 12.5\n t = 8, 10 ,12\nname=bolza\n").unwrap();
        assert_eq!(m.get("name"), Some("bolza"));
        assert_eq!(m.get_f64("radius").unwrap(), Some(12.5));
        assert_eq!(m.get_f64_list("t").unwrap(), Some(vec![8.0, 10.0, 12.0]));
        assert_eq!(m.get_f64("missing").unwrap(), None);
        let again = KvMap::parse(&m.to_string()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert_eq!(KvMap::parse("a = 1\nnonsense\n").unwrap_err().line, 2);
        assert!(KvMap::parse("a = 1\na = 2").is_err());
        assert!(KvMap::parse("= 2").is_err());
        assert!(KvMap::parse("x = abc").unwrap().get_f64("x").is_err());
    }
}
