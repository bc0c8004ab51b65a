//! Drives a configured walk and writes its outputs.
//!
//! An output directory holds the CSV series (see [`crate::output`]),
//! `snapshots/step-NNNNNN.bin` and `manifest.toml`. The manifest carries the
//! self-contained resolved configuration under `[config]`, so it can be passed
//! back to `run` to reproduce every deterministic output.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use bosewalk_core::oracle::evolution_deviations;
use bosewalk_core::{
    detect_regime_change, Executor, ObservableRecord, RegimeChange, ShiftKernel, StepReport, Walk,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Resolved, RunConfig};
use crate::error::{CliError, Result};
use crate::exec::{Threaded, WallClock};
use crate::output::{read_dimension_series, SeriesWriter, DETERMINISTIC, REPORTS};
use crate::snapshot::{hex, read_snapshot, write_snapshot, SnapshotHeader};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BOSEWALK_OUT_DIR";
pub const MANIFEST: &str = "manifest.toml";
const SNAPSHOT_DIR: &str = "snapshots";

/// Command-line overrides of a configuration.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub steps: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub snapshot_every: Option<u64>,
    pub toggles: Vec<(String, String)>,
    /// Print a line per snapshot to stderr.
    pub progress: bool,
}

impl RunOptions {
    fn apply(&self, config: &mut RunConfig) -> Result<()> {
        if let Some(steps) = self.steps {
            config.steps = steps;
        }
        if let Some(every) = self.snapshot_every {
            config.snapshot_every = every;
        }
        for (name, value) in &self.toggles {
            config.toggles.set(name, value)?;
        }
        Ok(())
    }

    fn executor(&self) -> Threaded {
        self.threads.map_or_else(Threaded::available, Threaded::new)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run: RunInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeInfo>,
    /// SHA-256 of each deterministic output file.
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub snapshots: Vec<SnapshotEntry>,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub source: String,
    pub source_sha256: String,
    pub final_step: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeInfo {
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
    pub terminal: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub step: u64,
    pub file: String,
    pub sha256: String,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
        toml::from_str(&text).map_err(|e| CliError::Mismatch(format!("{}: {e}", path.display())))
    }

    fn store(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST);
        let text = toml::to_string(self).expect("manifests always serialize");
        fs::write(&path, text).map_err(CliError::io(&path))
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub final_step: u64,
    /// Reports of the steps evaluated by this invocation.
    pub reports: Vec<StepReport>,
    pub regime: RegimeChange,
}

pub fn default_out_dir() -> PathBuf {
    env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("bosewalk-out"), PathBuf::from)
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    Ok(hex(&Sha256::digest(bytes)))
}

fn load_config(path: &Path, options: &RunOptions) -> Result<(Resolved, String)> {
    let mut config = RunConfig::load(path)?;
    options.apply(&mut config)?;
    let digest = sha256_file(path)?;
    Ok((config.resolve()?, digest))
}

/// Everything needed to continue writing one output directory.
struct Session<'a> {
    resolved: &'a Resolved,
    dir: PathBuf,
    writer: SeriesWriter,
    manifest: Manifest,
    progress: bool,
}

impl Session<'_> {
    fn header(&self, step: u64) -> SnapshotHeader {
        let r = self.resolved;
        SnapshotHeader::new(&r.graph, &r.coin, r.config.particles, r.settings, step)
    }

    fn last_snapshot(&self) -> Option<PathBuf> {
        self.manifest.snapshots.last().map(|s| self.dir.join(&s.file))
    }

    fn observe(&mut self, walk: &Walk, report: &StepReport) -> Result<()> {
        let r = self.resolved;
        let step = report.step;
        self.writer.report(report)?;
        if r.observes(step) {
            let record =
                ObservableRecord::compute(step, walk.state(), &r.space, report.effective_dimension, &r.request)
                    .map_err(|source| CliError::Run { step, source, last_snapshot: self.last_snapshot() })?;
            self.writer.record(&record)?;
        }
        if step % r.config.snapshot_every == 0 || step == r.config.steps {
            // rows up to this step must be on disk before the snapshot claims them
            self.writer.flush()?;
            let name = format!("{SNAPSHOT_DIR}/step-{step:06}.bin");
            let path = self.dir.join(&name);
            write_snapshot(&path, &self.header(step), walk.state())?;
            let sha256 = sha256_file(&path)?;
            self.manifest.snapshots.retain(|s| s.step < step);
            self.manifest.snapshots.push(SnapshotEntry { step, file: name, sha256 });
            self.manifest.run.final_step = step;
            self.manifest.store(&self.dir)?;
            if self.progress {
                eprintln!(
                    "step {step}/{}: effective dimension {}, {} amplitudes",
                    r.config.steps, report.effective_dimension, report.entries
                );
            }
        }
        Ok(())
    }

    fn drive(mut self, walk: &mut Walk, exec: &dyn Executor, observe_current: bool) -> Result<RunSummary> {
        let target = self.resolved.config.steps;
        let mut reports = Vec::new();
        if observe_current {
            let report = walk.report()?;
            self.observe(walk, &report)?;
            reports.push(report);
        }
        let mut clock = WallClock::default();
        while walk.step_index() < target {
            let step = walk.step_index() + 1;
            let report = walk
                .advance(exec, &mut clock)
                .map_err(|source| CliError::Run { step, source, last_snapshot: self.last_snapshot() })?;
            self.observe(walk, &report)?;
            reports.push(report);
        }
        self.writer.flush()?;
        self.finish(reports, walk.step_index())
    }

    fn finish(mut self, reports: Vec<StepReport>, final_step: u64) -> Result<RunSummary> {
        let series = read_dimension_series(&self.dir.join(REPORTS))?;
        let regime = detect_regime_change(&series)?;
        self.manifest.regime = Some(RegimeInfo {
            rule: regime.rule.to_owned(),
            step: regime.step,
            terminal: regime.terminal.clone(),
        });
        self.manifest.outputs = DETERMINISTIC
            .iter()
            .map(|name| Ok((name.to_string(), sha256_file(&self.dir.join(name))?)))
            .collect::<Result<_>>()?;
        self.manifest.run.final_step = final_step;
        self.manifest.store(&self.dir)?;
        Ok(RunSummary { dir: self.dir, final_step, reports, regime })
    }
}

/// Runs a configuration (or manifest) from step 0.
pub fn run(config_path: &Path, options: &RunOptions) -> Result<RunSummary> {
    let (resolved, source_sha256) = load_config(config_path, options)?;
    let dir = options.out.clone().or_else(|| resolved.config.out.clone()).unwrap_or_else(default_out_dir);
    let kernel = ShiftKernel::new(&resolved.graph, &resolved.coin, resolved.config.particles, resolved.settings.double_coin_factor)
        .map_err(|e| CliError::config("graph", e))?;
    let mut walk =
        Walk::new(kernel, resolved.settings, resolved.initial.clone()).map_err(|e| CliError::config("initial state", e))?;
    let snapshots = dir.join(SNAPSHOT_DIR);
    if snapshots.exists() {
        fs::remove_dir_all(&snapshots).map_err(CliError::io(&snapshots))?;
    }
    fs::create_dir_all(&snapshots).map_err(CliError::io(&snapshots))?;
    let writer = SeriesWriter::create(&dir, resolved.graph.vertices(), resolved.config.particles)?;
    let manifest = Manifest {
        run: RunInfo {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: bosewalk_core::VERSION.into(),
            source: config_path.display().to_string(),
            source_sha256,
            final_step: 0,
        },
        regime: None,
        outputs: BTreeMap::new(),
        snapshots: Vec::new(),
        config: resolved.self_contained(),
    };
    let session = Session { resolved: &resolved, dir, writer, manifest, progress: options.progress };
    session.drive(&mut walk, &options.executor(), true)
}

/// Continues the run that wrote `snapshot_path` up to the configured step count.
///
/// Rows after the snapshot step are discarded and recomputed, so the series
/// end up identical to an uninterrupted run.
pub fn resume(snapshot_path: &Path, config_path: &Path, options: &RunOptions) -> Result<RunSummary> {
    let (resolved, _) = load_config(config_path, options)?;
    let snapshot = read_snapshot(snapshot_path)?;
    let step = snapshot.header.step;
    let expected = SnapshotHeader::new(&resolved.graph, &resolved.coin, resolved.config.particles, resolved.settings, step);
    let problems = snapshot.header.mismatches(&expected);
    if !problems.is_empty() {
        return Err(CliError::Mismatch(problems.join("; ")));
    }
    let dir = match &options.out {
        Some(dir) => dir.clone(),
        // snapshots live in <run dir>/snapshots/
        None => snapshot_path
            .canonicalize()
            .map_err(CliError::io(snapshot_path))?
            .parent()
            .and_then(Path::parent)
            .map(Path::to_owned)
            .ok_or_else(|| CliError::Mismatch("cannot locate the run directory of the snapshot".into()))?,
    };
    let mut manifest = Manifest::load(&dir)?;
    manifest.snapshots.retain(|s| s.step <= step);
    manifest.config = resolved.self_contained();
    let table = snapshot.table(&resolved.space).map_err(|e| CliError::Snapshot {
        path: snapshot_path.to_owned(),
        message: e.to_string(),
    })?;
    let kernel = ShiftKernel::new(&resolved.graph, &resolved.coin, resolved.config.particles, resolved.settings.double_coin_factor)
        .map_err(|e| CliError::config("graph", e))?;
    let mut walk = Walk::resume(kernel, resolved.settings, table, step);
    let writer = SeriesWriter::resume(&dir, resolved.graph.vertices(), resolved.config.particles, step)?;
    let session = Session { resolved: &resolved, dir, writer, manifest, progress: options.progress };
    session.drive(&mut walk, &options.executor(), false)
}

/// Per-step deviation between the sparse engine and the dense oracle.
pub fn oracle_compare(config_path: &Path, options: &RunOptions) -> Result<Vec<f64>> {
    let (resolved, _) = load_config(config_path, options)?;
    evolution_deviations(&resolved.graph, &resolved.coin, &resolved.initial, resolved.config.steps, resolved.settings)
        .map_err(|e| match e {
            bosewalk_core::Error::OracleTooLarge { .. } => CliError::config("particles", e),
            other => CliError::Core(other),
        })
}
