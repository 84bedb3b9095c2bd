//! Flat `key=value` text records.
//!
//! Every domain type exchanged with the service or written by the CLI has a
//! canonical text form: one `key=value` pair per line, keys named after the
//! struct fields. Sequences are comma-separated. Reals use Rust's shortest
//! round-trip formatting so a record parses back to identical values.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Types with a canonical flat key/value text form.
pub trait KvRecord: Sized {
    fn write_kv(&self, out: &mut KvWriter);
    fn read_kv(map: &KvMap) -> Result<Self>;

    fn to_kv(&self) -> String {
        let mut w = KvWriter::default();
        self.write_kv(&mut w);
        w.finish()
    }

    fn from_kv(text: &str) -> Result<Self> {
        Self::read_kv(&KvMap::parse(text)?)
    }
}

#[derive(Debug, Default)]
pub struct KvWriter {
    buf: String,
}

impl KvWriter {
    pub fn field(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.buf.push_str(key);
        self.buf.push('=');
        self.buf.push_str(&value.to_string());
        self.buf.push('\n');
        self
    }

    pub fn list<T: Display>(
        &mut self,
        key: &str,
        values: impl IntoIterator<Item = T>,
    ) -> &mut Self {
        let joined = values
            .into_iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.field(key, joined)
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Parsed record. Blank lines and lines starting with `#` are ignored.
#[derive(Debug, Default, Clone)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("line {}: expected key=value", i + 1)))?;
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::parse(format!(
                    "line {}: duplicate key {key:?}",
                    i + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .raw(key)
            .ok_or_else(|| Error::parse(format!("missing key {key:?}")))?;
        raw.parse()
            .map_err(|_| Error::parse(format!("invalid value {raw:?} for key {key:?}")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(_) => self.get(key),
        }
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self
            .raw(key)
            .ok_or_else(|| Error::parse(format!("missing key {key:?}")))?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::parse(format!("invalid list item {s:?} for key {key:?}")))
            })
            .collect()
    }

    /// Fails on any key outside `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(Error::parse(format!("unknown key {k:?}"))),
            None => Ok(()),
        }
    }
}
