//! Sectioned key = value configuration files: `[section]` headers, one
//! binding per line, `#` comments. Flat keys before any header live in the
//! root section "".

use std::collections::HashMap;

use pbmo_core::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct Config {
    sections: HashMap<String, HashMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut sections: HashMap<String, HashMap<String, String>> = HashMap::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    Error::Parse(format!("line {}: unclosed section header", lineno + 1))
                })?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { sections })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|v| v.as_str())
    }

    pub fn str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.get(section, key).unwrap_or(default)
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Parse(format!("[{section}] {key} = {v} is not a number"))),
        }
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Parse(format!("[{section}] {key} = {v} is not a count"))),
        }
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Parse(format!("[{section}] {key} = {v} is not an integer"))),
        }
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| Error::Parse(format!("missing [{section}] {key}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let c = Config::parse("seed = 7\n[domain]\nkind = disk # a comment\nh = 0.125\n").unwrap();
        assert_eq!(c.get("", "seed"), Some("7"));
        assert_eq!(c.get("domain", "kind"), Some("disk"));
        assert_eq!(c.f64_or("domain", "h", 1.0).unwrap(), 0.125);
        assert_eq!(c.f64_or("domain", "missing", 2.5).unwrap(), 2.5);
        assert!(c.f64_or("domain", "kind", 1.0).is_err());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("[open\n").is_err());
        assert!(Config::parse("novalue\n").is_err());
    }
}
