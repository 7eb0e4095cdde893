//! Flat `key = value` configuration files for the benchmark drivers.

use std::collections::BTreeMap;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Parsed key-value pairs; every key must be consumed before [`finish`].
///
/// [`finish`]: KeyValues::finish
#[derive(Debug, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", idx + 1))?;
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (idx + 1, value.trim().to_string()))
                .is_some()
            {
                bail!("config line {}: `{key}` is set twice", idx + 1);
            }
        }
        Ok(Self { entries })
    }

    pub fn take<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::error::Error + Send + Sync + 'static,
    {
        match self.entries.remove(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .with_context(|| format!("config line {line}: bad value `{v}` for `{key}`")),
        }
    }

    /// A comma-separated list of numbers.
    pub fn take_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.entries.remove(key) {
            None => Ok(default.to_vec()),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .with_context(|| format!("config line {line}: bad number `{}` in `{key}`", s.trim()))
                })
                .collect(),
        }
    }

    /// Fails on any key that no caller asked for.
    pub fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            bail!("config line {line}: unknown key `{key}`");
        }
        Ok(())
    }
}
