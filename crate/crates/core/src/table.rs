//! Minimal tab-separated text handling shared by the file formats.
//!
//! Every table starts with a header row. Blank lines and lines whose first
//! non-space character is `#` are ignored.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One data row with its 1-based line number in the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Row<'a> {
    pub line: usize,
    pub fields: Vec<&'a str>,
}

/// Splits `text` into data rows, checking the header against `expected`.
///
/// Each data row must have exactly `expected.len()` fields.
pub fn parse_rows<'a>(source_name: &str, text: &'a str, expected: &[&str]) -> Result<Vec<Row<'a>>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
        if !header_seen {
            header_seen = true;
            if fields != expected {
                return Err(Error::format(
                    source_name,
                    line,
                    format!("expected header `{}`", expected.join("\\t")),
                ));
            }
            continue;
        }
        if fields.len() != expected.len() {
            return Err(Error::format(
                source_name,
                line,
                format!(
                    "expected {} tab-separated fields, found {}",
                    expected.len(),
                    fields.len()
                ),
            ));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(Error::format(source_name, line, "empty field"));
        }
        rows.push(Row { line, fields });
    }
    Ok(rows)
}

pub(crate) fn parse_number(source_name: &str, line: usize, field: &str, what: &str) -> Result<f64> {
    let value: f64 = field
        .parse()
        .map_err(|_| Error::format(source_name, line, format!("cannot parse {what} `{field}`")))?;
    if !value.is_finite() {
        return Err(Error::format(
            source_name,
            line,
            format!("{what} `{field}` is not finite"),
        ));
    }
    Ok(value)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_num(value: f64) -> String {
    // `Display` for f64 already emits the shortest round-trip representation.
    // Normalize negative zero so output does not depend on summation order.
    if value == 0.0 {
        "0".to_string()
    } else {
        format!("{value}")
    }
}
