//! CSV output and the run manifest that accompanies every written file.
//!
//! CSV layout: `#`-prefixed comment lines (the first carries the manifest
//! digest), then one header row, then comma-separated values with 17
//! significant digits.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sweep::Table;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest text that round-trips an `f64`: 17 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(mut out: W, table: &Table, digest: Option<&str>) -> io::Result<()> {
    if let Some(d) = digest {
        writeln!(out, "# manifest-digest: sha256:{d}")?;
    }
    writeln!(out, "{}", table.header.join(","))?;
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|&x| format_value(x)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Parses CSV written by [`write_csv`], skipping comment lines.
pub fn read_csv(text: &str) -> Result<Table, String> {
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or("missing header row")?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, l)| {
            let row: Vec<f64> = l
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("row {}: {e}", i + 1))?;
            if row.len() == header.len() {
                Ok(row)
            } else {
                Err(format!(
                    "row {} has {} fields, expected {}",
                    i + 1,
                    row.len(),
                    header.len()
                ))
            }
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(Table { header, rows })
}

/// Hex SHA-256 of the canonical JSON form of the resolved parameters.
pub fn parameters_digest(parameters: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(parameters).expect("JSON values always serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Everything needed to regenerate an output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    /// Seconds since the Unix epoch at write time; excluded from the digest.
    pub timestamp: u64,
    pub parameters: serde_json::Value,
    pub digest: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value, outputs: Vec<PathBuf>) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            artifact_version: ARTIFACT_VERSION.to_string(),
            command: command.to_string(),
            timestamp,
            digest: parameters_digest(&parameters),
            parameters,
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest always serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Sidecar path for the manifest of `output`: `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `table` to `path` and its manifest next to it.
pub fn write_with_manifest(
    path: &Path,
    table: &Table,
    command: &str,
    parameters: serde_json::Value,
) -> io::Result<RunManifest> {
    let manifest_file = manifest_path(path);
    let manifest = RunManifest::new(
        command,
        parameters,
        vec![path.to_path_buf(), manifest_file.clone()],
    );
    let mut buf = Vec::new();
    write_csv(&mut buf, table, Some(&manifest.digest))?;
    std::fs::write(path, buf)?;
    std::fs::write(&manifest_file, manifest.to_json())?;
    Ok(manifest)
}
