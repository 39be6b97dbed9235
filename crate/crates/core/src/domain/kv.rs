//! Flat `key = value` text with optional `[section]` headers.
//!
//! Order is preserved so documents round-trip byte-for-byte after
//! [`KvDocument::to_string`], and `#` starts a comment line.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDocument {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl KvDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = KvDocument::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse(format!("line {}: unterminated section header", lineno + 1)))?;
                current = name.trim().to_string();
                doc.section_mut(&current);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
            }
            let entries = doc.section_mut(&current);
            if entries.iter().any(|(k, _)| k == key) {
                return Err(Error::Parse(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        Ok(doc)
    }

    fn section_mut(&mut self, name: &str) -> &mut Vec<(String, String)> {
        let pos = match self.sections.iter().position(|(s, _)| s == name) {
            Some(p) => p,
            None => {
                self.sections.push((name.to_string(), Vec::new()));
                self.sections.len() - 1
            }
        };
        &mut self.sections[pos].1
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.iter().map(|(s, _)| s.as_str())
    }

    pub fn entries(&self, section: &str) -> &[(String, String)] {
        self.sections
            .iter()
            .find(|(s, _)| s == section)
            .map_or(&[], |(_, e)| e.as_slice())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries(section)
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        let raw = self
            .get(section, key)
            .ok_or_else(|| Error::Parse(format!("missing key `{key}` in section [{section}]")))?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("cannot parse `{raw}` for key `{key}`")))
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        match self.get(section, key) {
            None => Ok(default),
            Some(_) => self.require(section, key),
        }
    }

    pub fn set<T: fmt::Display>(&mut self, section: &str, key: &str, value: T) {
        let value = value.to_string();
        let entries = self.section_mut(section);
        match entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => entries.push((key.to_string(), value)),
        }
    }
}

impl fmt::Display for KvDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, entries) in &self.sections {
            if !name.is_empty() {
                if !first {
                    writeln!(f)?;
                }
                writeln!(f, "[{name}]")?;
            }
            for (k, v) in entries {
                writeln!(f, "{k} = {v}")?;
            }
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "# grid\nn = 4\np = 2.5\n\n[grid]\nnodes_r = 48\nL_r = 4\n";
        let doc = KvDocument::parse(text).unwrap();
        assert_eq!(doc.require::<usize>("", "n").unwrap(), 4);
        assert_eq!(doc.require::<f64>("", "p").unwrap(), 2.5);
        assert_eq!(doc.get("grid", "L_r"), Some("4"));
        let again = KvDocument::parse(&doc.to_string()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn errors() {
        assert!(KvDocument::parse("[open\n").is_err());
        assert!(KvDocument::parse("novalue\n").is_err());
        assert!(KvDocument::parse("a = 1\na = 2\n").is_err());
        let doc = KvDocument::parse("a = x").unwrap();
        assert!(doc.require::<f64>("", "a").is_err());
        assert!(doc.require::<f64>("", "b").is_err());
        assert_eq!(doc.get_or("", "b", 3.0).unwrap(), 3.0);
    }

    #[test]
    fn floats_are_lossless() {
        let mut doc = KvDocument::new();
        let x = 0.1 + 0.2;
        doc.set("s", "x", x);
        let back = KvDocument::parse(&doc.to_string()).unwrap();
        assert_eq!(back.require::<f64>("s", "x").unwrap(), x);
    }
}
