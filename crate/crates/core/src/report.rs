//! Plain `key: value` report documents.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportDocument {
    entries: Vec<(String, String)>,
}

impl ReportDocument {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends or replaces `key`.
    pub fn set(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn extend(&mut self, other: &ReportDocument) {
        for (k, v) in &other.entries {
            self.set(k.clone(), v);
        }
    }

    /// Copies `other` with every key prefixed.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &ReportDocument) {
        for (k, v) in &other.entries {
            self.set(format!("{prefix}{k}"), v);
        }
    }
}

impl fmt::Display for ReportDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}

impl FromStr for ReportDocument {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut doc = ReportDocument::new();
        for (i, line) in s.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(i + 1, "expected `key: value`"))?;
            doc.set(k.trim(), v.trim());
        }
        Ok(doc)
    }
}
