//! Report envelopes and serialized output writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::{Format, OutputArgs};

pub const TOOL: &str = "oasis";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the command name and its parsed flags.
pub fn config_hash<T: Serialize>(command: &str, args: &T) -> String {
    let canonical = serde_json::to_vec(&(command, args)).expect("flags serialize");
    Sha256::digest(&canonical)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with the tool header, newline-terminated.
pub fn json_document<T: Serialize>(command: &str, hash: &str, body: &T) -> Result<Vec<u8>> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        config_hash: hash,
        body,
    };
    let mut bytes = serde_json::to_vec_pretty(&env)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn csv_document(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().context("flushing CSV")
}

/// Fraction as a 0-100 percentage with one decimal.
pub fn pct(x: f64) -> String {
    format!("{:.1}", x * 100.0)
}

/// Shortest representation that parses back to the same `f64`.
pub fn full(x: f64) -> String {
    x.to_string()
}

pub struct Emitter {
    command: &'static str,
    hash: String,
    started: SystemTime,
}

impl Emitter {
    pub fn new<T: Serialize>(command: &'static str, args: &T) -> Self {
        Emitter {
            command,
            hash: config_hash(command, args),
            started: SystemTime::now(),
        }
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn command(&self) -> &'static str {
        self.command
    }

    /// Writes the primary output (file or stdout) and, for files, the
    /// metadata sidecar.
    pub fn emit(&self, out: &OutputArgs, bytes: &[u8]) -> Result<()> {
        self.emit_to(out.out.as_deref(), bytes)
    }

    pub fn emit_to(&self, path: Option<&Path>, bytes: &[u8]) -> Result<()> {
        match path {
            Some(path) => {
                write_file(path, bytes)?;
                self.write_sidecar(path)
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    fn write_sidecar(&self, path: &Path) -> Result<()> {
        let secs = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let meta = serde_json::json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "config_hash": self.hash,
            "output": path.file_name().map(|n| n.to_string_lossy().into_owned()),
            "started_unix": secs(self.started),
            "finished_unix": secs(SystemTime::now()),
        });
        let mut bytes = serde_json::to_vec_pretty(&meta)?;
        bytes.push(b'\n');
        write_file(&sidecar_path(path), &bytes)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn render<T: Serialize>(
    emitter: &Emitter,
    format: Format,
    body: &T,
    header: &[&str],
    rows: impl FnOnce() -> Vec<Vec<String>>,
) -> Result<Vec<u8>> {
    match format {
        Format::Json => json_document(emitter.command(), emitter.hash(), body),
        Format::Csv => csv_document(header, &rows()),
    }
}
