//! Versioned CSV tables, output directories and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA: u32 = 1;
pub const OUT_ENV: &str = "COMPO_APPROX_OUT";
pub const DEFAULT_OUT: &str = "compo-out";

pub fn schema_line() -> String {
    format!("# compo-approx-lab v{VERSION} schema={SCHEMA}")
}

/// Output directory: explicit flag, then the environment, then the default.
pub fn output_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-tripping scientific form; `nan`/`inf` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Schema line, the resolved config as comment lines, then the CSV body.
    pub fn render(&self, config: &str) -> String {
        let mut out = schema_line();
        out.push('\n');
        for line in config.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&csv_body(&self.header, &self.rows));
        out
    }
}

pub fn csv_body(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Prefixes an already formatted CSV body with the schema and config lines.
pub fn with_preamble(config: &str, body: &str) -> String {
    let mut out = schema_line();
    out.push('\n');
    for line in config.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(body);
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataFile {
    pub name: String,
    pub contents: String,
}

/// Everything an experiment produced. Data files are deterministic; notes
/// (timings and the like) go to the manifest only.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<DataFile>,
    pub seeds: Vec<u64>,
    pub notes: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push(DataFile {
            name: name.into(),
            contents,
        });
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.notes.push((key.into(), value.into()));
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> LabError {
    LabError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub struct Manifest<'a> {
    pub experiment: &'a str,
    pub config: &'a str,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
}

/// Writes every data file under `dir` followed by `manifest.txt`.
pub fn write_artifacts(dir: &Path, artifacts: &Artifacts, manifest: &Manifest<'_>) -> LabResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut text = format!(
        "compo-approx-lab {VERSION}\nexperiment {}\nconfig_sha256 {}\nstarted {}\nfinished {}\n",
        manifest.experiment,
        sha256_hex(manifest.config.as_bytes()),
        manifest.started.to_rfc3339_opts(SecondsFormat::Millis, true),
        manifest.finished.to_rfc3339_opts(SecondsFormat::Millis, true),
    );
    if !artifacts.seeds.is_empty() {
        text.push_str(&format!("run_seeds {}\n", crate::config::join(&artifacts.seeds)));
    }
    for f in &artifacts.files {
        let path = dir.join(&f.name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        fs::write(&path, &f.contents).map_err(|e| io_err(&path, e))?;
        text.push_str(&format!("file {} sha256={}\n", f.name, sha256_hex(f.contents.as_bytes())));
    }
    for (k, v) in &artifacts.notes {
        text.push_str(&format!("note {k} {v}\n"));
    }
    text.push_str("config\n");
    for line in manifest.config.lines() {
        text.push_str("  ");
        text.push_str(line);
        text.push('\n');
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}
