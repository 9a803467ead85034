//! Output directory handling, file headers and stdout rendering.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use wspd_core::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a command writes goes through this, so that each file lands
/// under `dir` and starts with the version/digest header.
#[derive(Debug)]
pub struct Output {
    pub dir: PathBuf,
    pub digest: String,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: PathBuf, digest: String) -> Self {
        Self { dir, digest, written: Vec::new() }
    }

    pub fn header(&self) -> Vec<String> {
        vec![format!("wspd {VERSION}"), format!("config-digest sha256:{}", self.digest)]
    }

    pub fn ensure_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.dir)?;
        Ok(&self.dir)
    }

    pub fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.ensure_dir()?.join(name);
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn record(&mut self, paths: impl IntoIterator<Item = PathBuf>) {
        self.written.extend(paths);
    }

    /// Writes `{"header": [...], "data": value}`.
    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let path = self.path(name)?;
        let doc = serde_json::json!({ "header": self.header(), "data": value });
        std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(path)
    }

    /// Writes a CSV with the comment header, one header row and `rows`.
    pub fn write_csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.path(name)?;
        let mut text = String::new();
        for h in self.header() {
            text.push_str(&format!("# {h}\n"));
        }
        text.push_str(&columns.join(","));
        text.push('\n');
        for r in rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        std::fs::write(&path, text)?;
        Ok(path)
    }

    /// Paths written so far, relative to the output directory where possible.
    pub fn written(&self) -> Vec<String> {
        self.written.iter().map(|p| p.strip_prefix(&self.dir).unwrap_or(p).display().to_string()).collect()
    }
}

/// Pretty JSON with sorted keys; parsing and re-serializing is byte-stable.
pub fn render_json(value: &impl Serialize) -> String {
    let v: Value = serde_json::to_value(value).expect("serializable");
    serde_json::to_string_pretty(&v).expect("serializable")
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn now_unix_s() -> f64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}
