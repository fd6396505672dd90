//! Append-only JSON-lines run registry: one record per CLI invocation with
//! the config snapshot, tool version, wall time, and an outputs manifest of
//! file paths and content hashes. Records with identical configs share a
//! run id, so re-runs are directly comparable.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const REGISTRY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: u32,
    pub run_id: String,
    pub command: String,
    /// Flat snapshot of the effective parameters, flags merged over config.
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_ms: u64,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Deterministic run id: hash of `(command, params, seed)`, truncated.
pub fn run_id(command: &str, params: &serde_json::Value, seed: Option<u64>) -> String {
    let blob = serde_json::json!({
        "command": command,
        "params": params,
        "seed": seed,
    });
    sha256_hex(serde_json::to_string(&blob).expect("params serialize").as_bytes())[..12]
        .to_string()
}

pub struct Registry {
    path: PathBuf,
}

impl Registry {
    pub fn new(path: PathBuf) -> Self {
        Registry { path }
    }

    pub fn append(&self, record: &RunRecord) -> std::io::Result<()> {
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(file, "{line}")
    }

    pub fn load(&self) -> std::io::Result<Vec<RunRecord>> {
        let text = std::fs::read_to_string(&self.path)?;
        let mut records = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<RunRecord>(line) {
                Ok(r) => records.push(r),
                Err(e) => {
                    eprintln!("warning: skipping malformed registry line: {e}");
                }
            }
        }
        Ok(records)
    }
}

/// Minimal `*`/`?` wildcard match over run ids.
pub fn wildcard_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    fn go(p: &[char], t: &[char]) -> bool {
        match (p.first(), t.first()) {
            (None, None) => true,
            (Some('*'), _) => go(&p[1..], t) || (!t.is_empty() && go(p, &t[1..])),
            (Some('?'), Some(_)) => go(&p[1..], &t[1..]),
            (Some(&c), Some(&d)) if c == d => go(&p[1..], &t[1..]),
            _ => false,
        }
    }
    go(&p, &t)
}
