//! TOML run configurations.
//!
//! ```toml
//! particles = 12
//! steps = 400
//! snapshot_every = 50
//!
//! [graph]
//! named = "cycle"
//! vertices = 10
//!
//! [[initial]]
//! chirality = 1
//! occupations = [0, 0, 12, 0, 0, 0, 0, 0, 0, 0]
//! amplitude = [0.0, -1.0]
//! ```
//!
//! Chiralities are one-based. Amplitudes are `[re, im]` and need not be
//! normalized. A run manifest is also accepted: its `[config]` table is a
//! resolved configuration.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use bosewalk_core::{
    AmplitudeTable, CoinMatrix, Complex64, ConfigSpace, Configuration, CountingMode, GraphName, GraphSpec,
    ObservableRequest, WalkSettings,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::graph_file::{load_graph, GraphFile};

pub const DEFAULT_SNAPSHOT_EVERY: u64 = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub particles: u32,
    pub steps: u64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
    /// Reserved; evolution is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub graph: GraphSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coin: Option<CoinSpec>,
    pub initial: Vec<InitialTerm>,
    #[serde(default)]
    pub observables: Schedule,
    #[serde(default)]
    pub toggles: Toggles,
}

fn default_snapshot_every() -> u64 {
    DEFAULT_SNAPSHOT_EVERY
}

/// Exactly one of `named` (with `vertices`), `file` or `inline`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub named: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<GraphFile>,
}

/// Explicit row-major coin, each entry `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinSpec {
    pub rows: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialTerm {
    pub chirality: usize,
    pub occupations: Vec<u32>,
    pub amplitude: [f64; 2],
}

/// Which observables are written, and at which steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedule {
    /// Observables at every `every`-th step; ignored when `steps` is given.
    pub every: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<u64>>,
    pub moments: Vec<u32>,
    pub g2: bool,
    pub counting: bool,
    pub phase_space: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        let request = ObservableRequest::default();
        Self {
            every: 1,
            steps: None,
            moments: request.moments,
            g2: request.g2,
            counting: request.counting.is_some(),
            phase_space: request.phase_space,
        }
    }
}

/// Interpretation knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Toggles {
    pub double_coin_factor: bool,
    /// `restricted` or `envelope`.
    pub counting_mode: String,
    pub drop_threshold: f64,
    pub dimension_tolerance: f64,
}

impl Default for Toggles {
    fn default() -> Self {
        let settings = WalkSettings::default();
        Self {
            double_coin_factor: settings.double_coin_factor,
            counting_mode: "restricted".into(),
            drop_threshold: settings.drop_threshold,
            dimension_tolerance: settings.dimension_tolerance,
        }
    }
}

impl Toggles {
    /// Applies `name=value`; hyphens and underscores are interchangeable.
    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| CliError::config("toggles", format!("{name}={value}: {e}"));
        match name.replace('-', "_").as_str() {
            "double_coin_factor" => self.double_coin_factor = value.parse().map_err(|e| bad(&e))?,
            "counting_mode" => self.counting_mode = value.to_owned(),
            "drop_threshold" => self.drop_threshold = value.parse().map_err(|e| bad(&e))?,
            "dimension_tolerance" => self.dimension_tolerance = value.parse().map_err(|e| bad(&e))?,
            _ => return Err(bad(&"unknown toggle")),
        }
        Ok(())
    }

    pub fn counting_mode(&self) -> Result<CountingMode> {
        match self.counting_mode.as_str() {
            "restricted" => Ok(CountingMode::Restricted),
            "envelope" => Ok(CountingMode::Envelope),
            other => Err(CliError::config("toggles", format!("counting_mode {other:?} is not restricted or envelope"))),
        }
    }

    pub fn settings(&self) -> Result<WalkSettings> {
        for (name, value) in [("drop_threshold", self.drop_threshold), ("dimension_tolerance", self.dimension_tolerance)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(CliError::config("toggles", format!("{name} must be finite and non-negative")));
            }
        }
        Ok(WalkSettings {
            drop_threshold: self.drop_threshold,
            dimension_tolerance: self.dimension_tolerance,
            double_coin_factor: self.double_coin_factor,
        })
    }
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: RunConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e| CliError::config("config", e))?;
        if value.contains_key("config") {
            let manifest: ManifestConfig = toml::Table::try_into(value).map_err(|e| CliError::config("config", e))?;
            return Ok(manifest.config);
        }
        toml::Table::try_into(value).map_err(|e| CliError::config("config", e))
    }

    /// Reads a config and makes a relative graph file path relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut config = Self::parse(&text)?;
        if let Some(file) = &mut config.graph.file {
            if file.is_relative() {
                *file = path.parent().unwrap_or(Path::new("")).join(&*file);
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let graph = self.graph.build()?;
        let d = graph.coin_order();
        let coin = match &self.coin {
            None => CoinMatrix::new(d).map_err(|e| CliError::config("coin", e))?,
            Some(spec) => spec.build(d)?,
        };
        let space = ConfigSpace::new(self.particles, graph.vertices()).map_err(|e| CliError::config("particles", e))?;
        let initial = self.initial_state(&space, d)?;
        let settings = self.toggles.settings()?;
        let counting_mode = self.toggles.counting_mode()?;
        let schedule = &self.observables;
        if schedule.moments.contains(&0) {
            return Err(CliError::config("observables", "moment orders start at 1"));
        }
        let scheduled = match &schedule.steps {
            Some(steps) => {
                if let Some(s) = steps.iter().find(|&&s| s > self.steps) {
                    return Err(CliError::config("observables", format!("step {s} is beyond steps = {}", self.steps)));
                }
                Some(steps.iter().copied().collect())
            }
            None if schedule.every == 0 => return Err(CliError::config("observables", "every must be positive")),
            None => None,
        };
        if self.snapshot_every == 0 {
            return Err(CliError::config("snapshot_every", "must be positive"));
        }
        let request = ObservableRequest {
            moments: schedule.moments.clone(),
            g2: schedule.g2,
            counting: schedule.counting.then_some(counting_mode),
            phase_space: schedule.phase_space,
        };
        Ok(Resolved { config: self.clone(), graph, coin, space, initial, settings, request, scheduled })
    }

    fn initial_state(&self, space: &ConfigSpace, d: usize) -> Result<AmplitudeTable> {
        let field = "initial state";
        if self.initial.is_empty() {
            return Err(CliError::config(field, "needs at least one term"));
        }
        let mut terms = Vec::with_capacity(self.initial.len());
        for (i, term) in self.initial.iter().enumerate() {
            let n = i + 1;
            if term.chirality == 0 || term.chirality > d {
                return Err(CliError::config(field, format!("term {n}: chirality {} not in 1..={d}", term.chirality)));
            }
            if term.occupations.len() != space.vertices() {
                return Err(CliError::config(
                    field,
                    format!("term {n}: {} occupations for {} vertices", term.occupations.len(), space.vertices()),
                ));
            }
            let total: u64 = term.occupations.iter().map(|&x| u64::from(x)).sum();
            if total != u64::from(self.particles) {
                return Err(CliError::config(
                    field,
                    format!("term {n}: {total} particles, expected {}", self.particles),
                ));
            }
            let [re, im] = term.amplitude;
            terms.push((term.chirality - 1, Configuration::from(term.occupations.clone()), Complex64::new(re, im)));
        }
        let table = AmplitudeTable::from_configurations(space, d, terms).map_err(|e| CliError::config(field, e))?;
        if !(table.norm_sqr() > 0.0) || !table.norm_sqr().is_finite() {
            return Err(CliError::config(field, "amplitudes must have a finite, nonzero norm"));
        }
        Ok(table)
    }
}

impl GraphSource {
    pub fn build(&self) -> Result<GraphSpec> {
        let field = "graph";
        match (&self.named, &self.file, &self.inline) {
            (Some(name), None, None) => {
                let name: GraphName = name.parse().map_err(|e| CliError::config(field, e))?;
                let vertices = self.vertices.ok_or_else(|| CliError::config(field, "named graphs need vertices"))?;
                GraphSpec::build_named(name, vertices).map_err(|e| CliError::config(field, e))
            }
            (None, Some(path), None) => load_graph(path),
            (None, None, Some(inline)) => inline.to_spec(),
            _ => Err(CliError::config(field, "give exactly one of named, file or inline")),
        }
    }

    pub fn inline(spec: &GraphSpec) -> Self {
        Self { inline: Some(GraphFile::from_spec(spec)), ..Self::default() }
    }
}

impl CoinSpec {
    pub fn from_matrix(coin: &CoinMatrix) -> Self {
        let d = coin.order();
        Self {
            rows: coin.rows().chunks_exact(d).map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect(),
        }
    }

    fn build(&self, d: usize) -> Result<CoinMatrix> {
        if self.rows.len() != d || self.rows.iter().any(|r| r.len() != d) {
            return Err(CliError::config("coin", format!("expected a {d}x{d} matrix")));
        }
        let entries = self.rows.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
        CoinMatrix::from_rows(d, entries).map_err(|e| CliError::config("coin", e))
    }
}

/// A configuration with every input checked and built.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub graph: GraphSpec,
    pub coin: CoinMatrix,
    pub space: ConfigSpace,
    /// Unnormalized initial state.
    pub initial: AmplitudeTable,
    pub settings: WalkSettings,
    pub request: ObservableRequest,
    scheduled: Option<BTreeSet<u64>>,
}

impl Resolved {
    pub fn observes(&self, step: u64) -> bool {
        match &self.scheduled {
            Some(steps) => steps.contains(&step),
            None => step % self.config.observables.every == 0,
        }
    }

    /// The configuration with the graph and coin written out, so it
    /// reproduces the run without any other file.
    pub fn self_contained(&self) -> RunConfig {
        let mut config = self.config.clone();
        config.graph = GraphSource::inline(&self.graph);
        config.coin = Some(CoinSpec::from_matrix(&self.coin));
        config
    }
}
