use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything needed to replay a run, plus bookkeeping that is allowed to
/// differ between runs (timing). Result files never contain the latter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub git_describe: String,
    pub command: String,
    /// Command line as given, program name excluded.
    pub argv: Vec<String>,
    /// Seed actually used after applying flag, config and environment.
    pub seed: u64,
    /// Effective configuration for config-driven commands.
    pub config: Option<String>,
    /// SHA-256 of every result file, keyed by file name.
    pub outputs: BTreeMap<String, String>,
    pub jobs: usize,
    pub wall_clock_seconds: f64,
    pub started_unix_seconds: u64,
}

impl Manifest {
    pub fn new(command: &str, argv: &[String], seed: u64, config: Option<String>) -> Self {
        Self {
            tool: "equipart".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            git_describe: env!("EQUIPART_GIT_DESCRIBE").into(),
            command: command.into(),
            argv: argv.to_vec(),
            seed,
            config,
            outputs: BTreeMap::new(),
            jobs: rayon::current_num_threads(),
            wall_clock_seconds: 0.0,
            started_unix_seconds: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    /// Records `name` (relative to `dir`) with its content hash.
    pub fn record(&mut self, dir: &Path, name: &str) -> Result<()> {
        self.outputs.insert(name.to_string(), file_sha256(&dir.join(name))?);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n").context("writing manifest")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}
