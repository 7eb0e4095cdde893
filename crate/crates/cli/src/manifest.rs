//! Run manifests written next to every command's outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// Subcommand, resolved settings and input digests of one run.
///
/// The rendered text contains nothing run-specific beyond these fields, so
/// two runs with equal manifests must leave byte-identical directories.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    subcommand: String,
    seed: u64,
    config: Vec<(String, String)>,
    inputs: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            seed,
            ..Default::default()
        }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.push((key.to_string(), value.to_string()));
        self
    }

    /// Records the SHA-256 digest of an input file under `role`.
    pub fn input(&mut self, role: &str, path: &Path) -> Result<&mut Self> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest.iter() {
            write!(hex, "{b:02x}").unwrap();
        }
        self.inputs.push((role.to_string(), hex));
        Ok(self)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "subcommand={}", self.subcommand).unwrap();
        writeln!(out, "version={}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        for (k, v) in &self.config {
            writeln!(out, "config.{k}={v}").unwrap();
        }
        for (k, v) in &self.inputs {
            writeln!(out, "input.{k}=sha256:{v}").unwrap();
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_output(dir, "manifest.txt", &self.render())
    }
}

/// Writes `contents` to `dir/name`, creating `dir` when needed.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}
