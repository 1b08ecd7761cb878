//! Run manifests and CSV rendering.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// Provenance block embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub overrides: Vec<String>,
    pub version: String,
    pub seed: u64,
    /// `SOURCE_DATE_EPOCH` when set, so reruns stay byte-identical.
    pub timestamp: String,
}

impl Manifest {
    pub fn new(command: &str, config_sha256: String, overrides: Vec<String>, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_sha256,
            overrides,
            version: format!("qmem {}", env!("CARGO_PKG_VERSION")),
            seed,
            timestamp: std::env::var("SOURCE_DATE_EPOCH").unwrap_or_else(|_| "unset".to_string()),
        }
    }

    fn comment_lines(&self) -> String {
        let overrides = if self.overrides.is_empty() {
            "none".to_string()
        } else {
            self.overrides.join(";")
        };
        format!(
            "# command: {}\n# config_sha256: {}\n# overrides: {}\n# version: {}\n# seed: {}\n# timestamp: {}\n",
            self.command, self.config_sha256, overrides, self.version, self.seed, self.timestamp
        )
    }
}

/// Shortest round-trip decimal; scientific notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub struct Table {
    manifest: Manifest,
    notes: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl Table {
    pub fn new(manifest: Manifest, header: Vec<String>) -> Self {
        Self {
            manifest,
            notes: Vec::new(),
            header,
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    /// Extra `# key: value` line after the manifest.
    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.push((key.to_string(), value.into()));
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    /// `# ` line after the data.
    pub fn footer(&mut self, line: String) {
        self.footer.push(line);
    }

    pub fn render(&self) -> String {
        let mut s = self.manifest.comment_lines();
        for (k, v) in &self.notes {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        for f in &self.footer {
            let _ = writeln!(s, "# {f}");
        }
        s
    }
}

/// Writes to `path`, or stdout when absent.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Config(format!("cannot write to stdout: {e}"))),
    }
}
