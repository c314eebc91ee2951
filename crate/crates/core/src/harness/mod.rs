//! Experiment registry and orchestration.
//!
//! Every run writes `run_manifest.json` (status `running`) into
//! `<out>/<experiment>/` before any data artifact, and rewrites it with
//! checksums and status `complete` (or `failed`) at the end.

mod config;
mod experiments;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::Table;
use crate::rng::RNG_ALGORITHM;

pub use config::{
    load_config, parse_config, tail_kappa, tail_label, CoordMethod, Dj94Settings, Experiment, ExperimentConfig,
    Fig1Settings, ForwardKind, FunctionAlgorithm, PriorConfig, PriorMassSettings, RateSweepSettings, SamplerSettings,
    CENTERED_MIN_PRECISION,
};
pub use experiments::{cosine_basis, rate_sweep_points, RatePoint, DJ94_REFERENCE_HIERARCHICAL, DJ94_REFERENCE_OT};

pub const MANIFEST_FILE: &str = "run_manifest.json";

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub paper_scale: bool,
    /// Parent output directory; overrides `output_dir` from the config.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub status: RunStatus,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub paper_scale: bool,
    pub version: String,
    pub rng_algorithm: String,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    /// Relative path to sha256 hex digest.
    pub outputs: BTreeMap<String, String>,
    /// Experiment-specific facts (achieved SNR, fitted slopes, ...).
    pub extra: BTreeMap<String, serde_json::Value>,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

/// Writes artifacts into one experiment directory and records checksums.
pub(crate) struct Sink {
    dir: PathBuf,
    pub(crate) outputs: BTreeMap<String, String>,
    pub(crate) extra: BTreeMap<String, serde_json::Value>,
}

impl Sink {
    fn record(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(p) = path.parent() {
            fs::create_dir_all(p)?;
        }
        fs::write(&path, bytes)?;
        let digest = Sha256::digest(bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.outputs.insert(rel.to_string(), hex);
        Ok(())
    }

    pub(crate) fn table(&mut self, rel: &str, table: &Table) -> Result<()> {
        self.record(rel, &table.to_bytes()?)
    }

    pub(crate) fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.record(rel, &bytes)
    }
}

/// Outcome of a run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

fn write_manifest(dir: &Path, m: &RunManifest) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(m)?;
    bytes.push(b'\n');
    fs::write(dir.join(MANIFEST_FILE), bytes)?;
    Ok(())
}

/// Validate and run one experiment.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let mut config = config.clone();
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    config.validate()?;
    let parent = opts
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let dir = parent.join(config.experiment.name());
    fs::create_dir_all(&dir)?;

    let start = Instant::now();
    let mut manifest = RunManifest {
        experiment: config.experiment,
        status: RunStatus::Running,
        config: config.clone(),
        seed: config.seed,
        paper_scale: opts.paper_scale,
        version: env!("CARGO_PKG_VERSION").to_string(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        threads: rayon::current_num_threads(),
        wall_clock_seconds: 0.0,
        outputs: BTreeMap::new(),
        extra: BTreeMap::new(),
        error: None,
    };
    write_manifest(&dir, &manifest)?;

    let mut sink = Sink {
        dir: dir.clone(),
        outputs: BTreeMap::new(),
        extra: BTreeMap::new(),
    };
    let result = experiments::dispatch(&config, opts.paper_scale, &mut sink);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.outputs = sink.outputs;
    manifest.extra = sink.extra;
    match result {
        Ok(()) => {
            manifest.status = RunStatus::Complete;
            write_manifest(&dir, &manifest)?;
            Ok(RunSummary { dir, manifest })
        }
        Err(e) => {
            let e = e.context(config.experiment.name());
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            write_manifest(&dir, &manifest)?;
            Err(e)
        }
    }
}

/// Load a configuration file, apply overrides and run it.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    run(&load_config(path)?, opts)
}

/// Check that the config names the experiment that was asked for.
pub fn expect_experiment(config: &ExperimentConfig, requested: Experiment) -> Result<()> {
    if config.experiment != requested {
        return Err(Error::config(
            "experiment",
            format!(
                "config is for {} but {} was requested",
                config.experiment.name(),
                requested.name()
            ),
        ));
    }
    Ok(())
}
