//! Artifact writers. Sample tables use 17 significant digits so reruns can be
//! compared byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text with a header row; every cell is formatted by [`fmt_value`].
pub fn csv_table(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        for (j, c) in columns.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_value(c[i]));
        }
        out.push('\n');
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Collects the files written by one command.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    pub fn text(&mut self, name: &str, contents: &str) -> std::io::Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, contents)?;
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        s.push('\n');
        self.text(name, &s)
    }

    pub fn samples(&mut self, name: &str, t: &[f64], u: &[f64], du: &[f64]) -> std::io::Result<PathBuf> {
        self.text(name, &csv_table(&["t", "u", "du"], &[t, u, du]))
    }
}

/// Written last by every command.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub library_version: &'a str,
    pub cli_version: &'a str,
    pub config_sha256: String,
    pub config: &'a C,
    pub threads: usize,
    pub parallel_build: bool,
    pub exit_code: i32,
    pub status: String,
    pub artifacts: Vec<String>,
    pub summary: serde_json::Value,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_value(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_value(-2.0), "-2.0000000000000000e0");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_value(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn table_layout() {
        let t = csv_table(&["a", "b"], &[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(t.lines().count(), 3);
        assert!(t.starts_with("a,b\n1.0000000000000000e0,3.0000000000000000e0\n"));
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
