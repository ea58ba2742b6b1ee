//! Run manifests and artifact writing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// SHA-256 of the resolved config with the fields that cannot change results
/// (worker count, output directory) blanked.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canon = ExperimentConfig {
        workers: 0,
        out: PathBuf::new(),
        ..cfg.clone()
    };
    let json = serde_json::to_string(&canon).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub manifest_hash: String,
    pub config: &'a ExperimentConfig,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    pub results: R,
}

impl<'a, R: Serialize> Manifest<'a, R> {
    pub fn new(command: &'static str, config: &'a ExperimentConfig, results: R) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            manifest_hash: config_hash(config),
            config,
            wall_time_s: 0.0,
            files: Vec::new(),
            results,
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Shortest round-trip decimal form; empty for missing values.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
