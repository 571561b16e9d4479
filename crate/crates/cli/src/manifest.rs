//! Run manifests and output writing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gsa_core::io::{write_atomic, Table};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// `run` or `converge`.
    pub command: String,
    /// Every resolved setting, enough to repeat the run.
    pub config: BTreeMap<String, Vec<String>>,
    pub seed: u64,
    pub eval_count: u64,
    pub wall_time_s: f64,
    pub threads: usize,
    /// Working directory relative paths in `config` refer to.
    pub cwd: PathBuf,
    /// SHA-256 of every input file the run read.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every output file, keyed by file name.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid manifest {}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

/// Write each table as `<name>.csv` and `<name>.json`; returns file hashes.
pub fn write_tables(dir: &Path, tables: &[(String, Table)]) -> CliResult<BTreeMap<String, String>> {
    let mut hashes = BTreeMap::new();
    for (name, table) in tables {
        for (ext, body) in [("csv", table.to_csv()), ("json", table.to_json())] {
            let file = format!("{name}.{ext}");
            write_atomic(&dir.join(&file), &body)?;
            hashes.insert(file, sha256_hex(body.as_bytes()));
        }
    }
    Ok(hashes)
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> CliResult<PathBuf> {
    let path = dir.join(MANIFEST_FILE);
    let mut body = serde_json::to_string_pretty(m)?;
    body.push('\n');
    write_atomic(&path, &body)?;
    Ok(path)
}
