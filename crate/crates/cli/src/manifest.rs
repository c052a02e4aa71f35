//! `manifest.txt`: one `key=value` per line. Outputs are listed as
//! `output.<file>=<sha256>`; `wall_clock_seconds` is the only line that
//! differs between two runs of the same config.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FILE_NAME: &str = "manifest.txt";
pub const TOOL: &str = concat!("fracbam ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub mode: String,
    /// checksum of the config snapshot
    pub config_sha256: String,
    pub wall_clock_seconds: f64,
    /// file name -> sha256, sorted by name
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("missing key '{0}'")]
    Missing(&'static str),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn is_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut out = format!(
            "tool={}\nmode={}\nconfig.sha256={}\nwall_clock_seconds={:.3}\n",
            self.tool, self.mode, self.config_sha256, self.wall_clock_seconds
        );
        for (name, digest) in &self.outputs {
            out.push_str(&format!("output.{name}={digest}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut tool = None;
        let mut mode = None;
        let mut config = None;
        let mut wall = None;
        let mut outputs = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let err = |reason: String| ManifestError::Line { line: i + 1, reason };
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key=value".into()))?;
            match key {
                "tool" => tool = Some(value.to_string()),
                "mode" => mode = Some(value.to_string()),
                "config.sha256" if is_digest(value) => config = Some(value.to_string()),
                "wall_clock_seconds" => {
                    let v: f64 = value.parse().map_err(|_| err(format!("'{value}' is not a number")))?;
                    wall = Some(v);
                }
                _ => match key.strip_prefix("output.") {
                    Some(name) if valid_name(name) && is_digest(value) => {
                        if outputs.insert(name.to_string(), value.to_string()).is_some() {
                            return Err(err(format!("'{name}' listed twice")));
                        }
                    }
                    _ => return Err(err(format!("unexpected entry '{key}'"))),
                },
            }
        }
        Ok(Self {
            tool: tool.ok_or(ManifestError::Missing("tool"))?,
            mode: mode.ok_or(ManifestError::Missing("mode"))?,
            config_sha256: config.ok_or(ManifestError::Missing("config.sha256"))?,
            wall_clock_seconds: wall.ok_or(ManifestError::Missing("wall_clock_seconds"))?,
            outputs,
        })
    }
}

/// Plain file names, or `run_<n>/<file>` for sweep members.
fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.split('/').all(|part| {
            !part.is_empty() && part != "." && part != ".." && part.bytes().all(|b| b.is_ascii_alphanumeric() || b"._-".contains(&b))
        })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mismatch {
    Missing(String),
    Changed(String),
}

/// Re-hashes every listed file in `dir`. An empty list means the run verifies.
pub fn verify_dir(dir: &Path) -> Result<Vec<Mismatch>, String> {
    let path = dir.join(FILE_NAME);
    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let manifest = RunManifest::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut bad = Vec::new();
    let entries = std::iter::once((crate::runner::CONFIG_SNAPSHOT, &manifest.config_sha256))
        .chain(manifest.outputs.iter().map(|(k, v)| (k.as_str(), v)));
    for (name, digest) in entries {
        match fs::read(dir.join(name)) {
            Ok(bytes) if sha256_hex(&bytes) == *digest => {}
            Ok(_) => bad.push(Mismatch::Changed(name.to_string())),
            Err(_) => bad.push(Mismatch::Missing(name.to_string())),
        }
    }
    Ok(bad)
}
