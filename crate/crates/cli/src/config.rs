//! Flat `key = value` configuration with `[section]` headers.
//!
//! `#` starts a comment, on its own line or after a value. Keys before the first header live in
//! the unnamed section. Arrays are comma lists. Every lookup marks the entry as
//! used so that [`Config::finish`] can reject misspelled keys.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::str::FromStr;

use thiserror::Error;

use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", self.render())]
pub struct ConfigError {
    /// 1-based; 0 when the problem is a missing key.
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn render(&self) -> String {
        if self.line == 0 {
            self.message.clone()
        } else {
            format!("line {}: {}", self.line, self.message)
        }
    }

    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: Vec<Entry>,
    used: RefCell<BTreeSet<usize>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<Entry> = Vec::new();
        let mut section = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            // `#` never appears in values, so everything after it is a comment
            let body = raw.split_once('#').map_or(raw, |(b, _)| b).trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::at(line, "section header is missing ']'"))?.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(ConfigError::at(line, format!("bad section name '{name}'")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::at(line, "expected 'key = value'"))?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::at(line, format!("bad key '{key}'")));
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("key '{key}' has no value")));
            }
            if let Some(prev) = entries.iter().find(|e| e.section == section && e.key == key) {
                return Err(ConfigError::at(
                    line,
                    format!("duplicate key '{}' (first set on line {})", qualified(&section, key), prev.line),
                ));
            }
            entries.push(Entry { section: section.clone(), key: key.to_string(), value: value.to_string(), line });
        }
        Ok(Self { entries, used: RefCell::default() })
    }

    /// Replaces or adds a value; used for command-line overrides.
    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|e| e.section == section && e.key == key) {
            Some(e) => e.value = value,
            None => self.entries.push(Entry { section: section.into(), key: key.into(), value, line: 0 }),
        }
    }

    fn find(&self, section: &str, key: &str) -> Option<(usize, &Entry)> {
        let found = self.entries.iter().enumerate().find(|(_, e)| e.section == section && e.key == key);
        if let Some((k, _)) = found {
            self.used.borrow_mut().insert(k);
        }
        found
    }

    pub fn has(&self, section: &str, key: &str) -> bool {
        self.entries.iter().any(|e| e.section == section && e.key == key)
    }

    pub fn str_opt(&self, section: &str, key: &str) -> Option<&str> {
        self.find(section, key).map(|(_, e)| e.value.as_str())
    }

    pub fn str(&self, section: &str, key: &str) -> Result<&str, ConfigError> {
        self.str_opt(section, key).ok_or_else(|| missing(section, key))
    }

    /// Line of an entry, for diagnostics raised after parsing.
    pub fn line_of(&self, section: &str, key: &str) -> usize {
        self.entries.iter().find(|e| e.section == section && e.key == key).map_or(0, |e| e.line)
    }

    pub fn value<T: FromStr>(&self, section: &str, key: &str) -> Result<T, ConfigError> {
        self.value_opt(section, key)?.ok_or_else(|| missing(section, key))
    }

    pub fn value_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.value_opt(section, key)?.unwrap_or(default))
    }

    pub fn value_opt<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError> {
        let Some((_, e)) = self.find(section, key) else {
            return Ok(None);
        };
        e.value.parse().map(Some).map_err(|_| ConfigError::at(e.line, format!("cannot read '{}' for {}", e.value, qualified(section, key))))
    }

    pub fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Vec<T>, ConfigError> {
        self.list_opt(section, key)?.ok_or_else(|| missing(section, key))
    }

    pub fn list_opt<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some((_, e)) = self.find(section, key) else {
            return Ok(None);
        };
        split_list(&e.value)
            .map(|item| {
                item.parse().map_err(|_| ConfigError::at(e.line, format!("cannot read list item '{item}' of {}", qualified(section, key))))
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    pub fn expr_opt(&self, section: &str, key: &str) -> Result<Option<Expr>, ConfigError> {
        let Some((_, e)) = self.find(section, key) else {
            return Ok(None);
        };
        Expr::parse(&e.value).map(Some).map_err(|err| ConfigError::at(e.line, format!("{}: {err}", qualified(section, key))))
    }

    pub fn expr(&self, section: &str, key: &str) -> Result<Expr, ConfigError> {
        self.expr_opt(section, key)?.ok_or_else(|| missing(section, key))
    }

    pub fn expr_or(&self, section: &str, key: &str, default: f64) -> Result<Expr, ConfigError> {
        Ok(self.expr_opt(section, key)?.unwrap_or_else(|| Expr::constant(default)))
    }

    pub fn expr_list_opt(&self, section: &str, key: &str) -> Result<Option<Vec<Expr>>, ConfigError> {
        let Some((_, e)) = self.find(section, key) else {
            return Ok(None);
        };
        split_list(&e.value)
            .map(|item| Expr::parse(item).map_err(|err| ConfigError::at(e.line, format!("{}: {err}", qualified(section, key)))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Builds a diagnostic pointing at an entry.
    pub fn error(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::at(self.line_of(section, key), format!("{}: {}", qualified(section, key), message.into()))
    }

    /// Fails on the first entry no lookup has touched.
    pub fn finish(&self) -> Result<(), ConfigError> {
        let used = self.used.borrow();
        match self.entries.iter().enumerate().find(|(k, _)| !used.contains(k)) {
            Some((_, e)) => Err(ConfigError::at(e.line, format!("unknown key '{}'", qualified(&e.section, &e.key)))),
            None => Ok(()),
        }
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim)
}

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn missing(section: &str, key: &str) -> ConfigError {
    ConfigError::at(0, format!("missing required key '{}'", qualified(section, key)))
}
