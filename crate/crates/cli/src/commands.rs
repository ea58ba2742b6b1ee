//! The `run` and `sweep` subcommands.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Signature, SweepKind};
use crate::manifest::{config_hash, ensure_dir, fmt_opt, write_json, write_text, Manifest};
use crate::point::{evaluate, PointResult};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub manifest: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

/// Simulate one point and write its signature fields and manifest.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Outcome> {
    if !cfg.sweep.is_empty() {
        bail!("config defines sweep axes; use the `sweep` subcommand");
    }
    let start = Instant::now();
    let res = evaluate(cfg)?;
    ensure_dir(&cfg.out)?;
    let hash = config_hash(cfg);
    let mut files = Vec::new();
    for (name, field) in &res.fields {
        let path = cfg.out.join(format!("{name}.csv"));
        write_text(&path, &field.to_csv(Some(&hash)))?;
        files.push(path);
    }
    let mut m = Manifest::new("run", cfg, &res);
    m.files = file_names(&files);
    m.wall_time_s = start.elapsed().as_secs_f64();
    let manifest = cfg.out.join("manifest.json");
    write_json(&manifest, &m)?;
    Ok(Outcome {
        manifest,
        files,
        summary: serde_json::to_value(&res)?,
    })
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub coords: Vec<f64>,
    pub n_samples: usize,
    pub negativity: f64,
    pub oracle_negativity: Option<f64>,
    pub sampling_error: f64,
    pub step_error: Option<f64>,
    pub total_error: f64,
    pub max_imag: f64,
    pub gain_abs: f64,
    pub variance: Option<f64>,
    pub fringe_contrast: Option<f64>,
}

impl SweepRow {
    fn from_point(index: usize, coords: Vec<f64>, r: &PointResult) -> Result<Self> {
        let Some(n) = r.negativity else {
            bail!("sweep point {index} produced no negativity");
        };
        Ok(Self {
            index,
            coords,
            n_samples: r.n_samples,
            negativity: n.value,
            oracle_negativity: n.oracle,
            sampling_error: n.sampling_error,
            step_error: n.step_error,
            total_error: n.total_error,
            max_imag: n.max_imag,
            gain_abs: r.gain_abs,
            variance: r.variance.map(|v| v.variance),
            fringe_contrast: r.fringes.map(|f| f.contrast),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointLine {
    hash: String,
    row: SweepRow,
}

fn load_checkpoint(path: &Path, hash: &str) -> Result<BTreeMap<usize, SweepRow>> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    for line in BufReader::new(f).lines() {
        let line = line?;
        // a torn final line from an interrupted run is skipped
        if let Ok(c) = serde_json::from_str::<CheckpointLine>(&line) {
            if c.hash == hash {
                done.insert(c.row.index, c.row);
            }
        }
    }
    Ok(done)
}

/// Columns of the sweep table for `cfg`.
pub fn sweep_header(cfg: &ExperimentConfig) -> Vec<String> {
    let mut h = Vec::new();
    for a in &cfg.sweep {
        h.push(a.kind.column().to_owned());
        if a.kind == SweepKind::TStore {
            h.push("gamma_m_t".to_owned());
        }
    }
    for c in [
        "n_samples",
        "negativity",
        "oracle_negativity",
        "sampling_error",
        "step_error",
        "total_error",
        "max_imag",
        "gain_abs",
        "variance",
        "fringe_contrast",
    ] {
        h.push(c.to_owned());
    }
    h
}

pub fn sweep_csv(cfg: &ExperimentConfig, hash: &str, rows: &[SweepRow]) -> String {
    let mut s = format!("# manifest_hash: {hash}\n{}\n", sweep_header(cfg).join(","));
    for r in rows {
        let mut cols = Vec::new();
        for (a, v) in cfg.sweep.iter().zip(&r.coords) {
            cols.push(v.to_string());
            if a.kind == SweepKind::TStore {
                cols.push((v * cfg.params.gamma_m).to_string());
            }
        }
        cols.extend([
            r.n_samples.to_string(),
            r.negativity.to_string(),
            fmt_opt(r.oracle_negativity),
            r.sampling_error.to_string(),
            fmt_opt(r.step_error),
            r.total_error.to_string(),
            r.max_imag.to_string(),
            r.gain_abs.to_string(),
            fmt_opt(r.variance),
            fmt_opt(r.fringe_contrast),
        ]);
        s.push_str(&cols.join(","));
        s.push('\n');
    }
    s
}

/// Evaluate every sweep point, checkpointing after each one so an
/// interrupted sweep resumes where it stopped.
pub fn cmd_sweep(cfg: &ExperimentConfig, mut progress: impl FnMut(usize, usize)) -> Result<Outcome> {
    let start = Instant::now();
    let mut cfg = cfg.clone();
    if !cfg.wants(Signature::Negativity) {
        cfg.signatures.push(Signature::Negativity);
    }
    ensure_dir(&cfg.out)?;
    let hash = config_hash(&cfg);
    let ckpt = cfg.out.join("sweep.checkpoint.jsonl");
    let mut done = load_checkpoint(&ckpt, &hash)?;
    let points = cfg.points();
    let coords = cfg.coordinates();
    let total = points.len();
    let mut log = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&ckpt)
        .with_context(|| format!("opening {}", ckpt.display()))?;
    for (i, (p, c)) in points.iter().zip(coords).enumerate() {
        if done.contains_key(&i) {
            continue;
        }
        let r = evaluate(p).with_context(|| format!("sweep point {i} {c:?}"))?;
        let row = SweepRow::from_point(i, c, &r)?;
        let line = serde_json::to_string(&CheckpointLine {
            hash: hash.clone(),
            row: row.clone(),
        })?;
        writeln!(log, "{line}")?;
        log.flush()?;
        done.insert(i, row);
        progress(done.len(), total);
    }
    let rows: Vec<SweepRow> = done.into_values().collect();
    let table = cfg.out.join("sweep.csv");
    write_text(&table, &sweep_csv(&cfg, &hash, &rows))?;
    let mut m = Manifest::new("sweep", &cfg, &rows);
    m.files = file_names(std::slice::from_ref(&table));
    m.wall_time_s = start.elapsed().as_secs_f64();
    let manifest = cfg.out.join("manifest.json");
    write_json(&manifest, &m)?;
    Ok(Outcome {
        manifest,
        files: vec![table],
        summary: serde_json::to_value(&rows)?,
    })
}
