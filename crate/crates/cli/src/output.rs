//! Bit-stable output writing: fixed-format CSV, JSON-lines summaries, and
//! a manifest with sha-256 digests of every artifact.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io;
use std::path::{Path, PathBuf};

/// 17 significant digits, '.' decimal, no locale: enough to round-trip
/// any f64 and stable across runs.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub struct OutputSet {
    dir: PathBuf,
    outputs: Vec<OutputDigest>,
}

#[derive(Serialize, Clone)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

impl OutputSet {
    pub fn new(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        let digest = Sha256::digest(contents.as_bytes());
        self.outputs.push(OutputDigest {
            path: name.to_string(),
            sha256: format!("{digest:x}"),
        });
        Ok(())
    }

    pub fn finish(
        mut self,
        subcommand: &str,
        config: serde_json::Value,
        started_unix_ms: u128,
    ) -> io::Result<()> {
        #[derive(Serialize)]
        struct RunManifest {
            version: String,
            subcommand: String,
            config: serde_json::Value,
            started_unix_ms: u128,
            finished_unix_ms: u128,
            outputs: Vec<OutputDigest>,
        }
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            config,
            started_unix_ms,
            finished_unix_ms: now_ms(),
            outputs: std::mem::take(&mut self.outputs),
        };
        let body = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(self.dir.join("manifest.json"), body)
    }
}

pub fn now_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Minimal CSV accumulator; all values are pre-formatted strings with no
/// quoting needs (numbers, booleans, 'x'-joined coordinates).
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::with_capacity(1 << 16);
        buf.push_str(header);
        buf.push('\n');
        Self { buf }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            self.buf.push_str(&f);
            first = false;
        }
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

pub fn coords_label(coords: &[u64]) -> String {
    coords
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

pub fn jsonl<T: Serialize>(items: &[T]) -> serde_json::Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}
