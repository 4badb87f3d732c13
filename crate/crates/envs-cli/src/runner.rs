use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::experiments::{run_seed, SeedOutput};
use crate::svg::{line_chart, Series};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "SUCCESSOR_LAB_THREADS";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub files: Vec<String>,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the compact JSON of the effective config.
    pub config_hash: String,
    pub artifact_version: String,
    pub experiment: String,
    pub threads: usize,
    pub seeds: Vec<SeedRecord>,
    pub failed: usize,
    pub wall_ms: u64,
}

impl RunManifest {
    pub fn succeeded(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub parallel: Option<usize>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let text = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Requested parallelism (default: all cores), capped by SUCCESSOR_LAB_THREADS.
pub fn thread_count(requested: Option<usize>) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&c| c > 0);
    let n = requested.unwrap_or(available).max(1);
    cap.map_or(n, |c| n.min(c))
}

/// Runs every seed (concurrently when threads > 1), writes per-seed CSV and
/// SVG files, then writes the manifest last.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let mut cfg = cfg.clone();
    if let Some(seeds) = &opts.seeds {
        cfg.seeds = seeds.clone();
    }
    cfg.validate()?;
    let out = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out)?;
    let threads = thread_count(opts.parallel);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::InvalidConfig(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let records: Vec<SeedRecord> = pool.install(|| cfg.seeds.par_iter().map(|&seed| run_one(&cfg, seed, &out)).collect());
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    let manifest = RunManifest {
        config_hash: config_hash(&cfg),
        artifact_version: ARTIFACT_VERSION.to_string(),
        experiment: cfg.experiment.name().to_string(),
        threads,
        seeds: records,
        failed,
        wall_ms: start.elapsed().as_millis() as u64,
    };
    fs::write(out.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

fn run_one(cfg: &ExperimentConfig, seed: u64, out: &Path) -> SeedRecord {
    let start = Instant::now();
    let mut files = Vec::new();
    let error = run_seed(cfg, seed).and_then(|o| write_outputs(cfg, seed, &o, out, &mut files)).err().map(|e| e.to_string());
    SeedRecord { seed, files, wall_ms: start.elapsed().as_millis() as u64, error }
}

fn write_outputs(cfg: &ExperimentConfig, seed: u64, o: &SeedOutput, out: &Path, files: &mut Vec<String>) -> Result<()> {
    let stem = format!("{}-seed{seed}", cfg.experiment.name());
    let csv = o.table.to_csv_string()?;
    let name = format!("{stem}.csv");
    fs::write(out.join(&name), csv)?;
    files.push(name);
    if let (true, Some(plot)) = (cfg.output.svg && o.table.rows.len() > 1, &o.plot) {
        let xs = o.table.column(plot.x).expect("plot x is a schema column");
        let series: Vec<Series> = plot
            .ys
            .iter()
            .map(|&y| {
                let ys = o.table.column(y).expect("plot y is a schema column");
                let points = xs.iter().zip(ys).filter_map(|(x, y)| Some((x.as_f64()?, y.as_f64()?))).collect();
                Series { name: y.to_string(), points }
            })
            .collect();
        let title = format!("{} (seed {seed})", cfg.experiment.name());
        let name = format!("{stem}.svg");
        fs::write(out.join(&name), line_chart(&title, plot.x, &series, cfg.output.log_y))?;
        files.push(name);
    }
    for (suffix, contents) in &o.extras {
        let name = format!("{stem}-{suffix}");
        fs::write(out.join(&name), contents)?;
        files.push(name);
    }
    Ok(())
}
