//! The conditional shift operator and the multi-step driver.
//!
//! One step maps an amplitude `C` on `(k, n)` to every `(j, n')` where `n'`
//! is `n` with one particle moved along an edge `mu -> nu` of component `k`,
//! weighted by `h_jk * sqrt(n_mu * (n_nu + 1))`. Contributions to the same
//! target interfere additively.
//!
//! The kernel evaluates this as a gather: each target rank pulls from its
//! sources over the component edges in a fixed order. Every output value is
//! therefore computed by the same sequence of floating point operations no
//! matter how the targets are split across workers.

use alloc::vec::Vec;
use core::time::Duration;

use num_complex::Complex64;

use crate::coin::CoinMatrix;
use crate::error::{Error, Result};
use crate::graph::{Edge, GraphSpec};
use crate::statespace::{AmplitudeTable, ConfigSpace, Key};

const NO_MOVE: u32 = u32::MAX;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Runs a job over consecutive chunks of an output buffer.
///
/// `job(first, chunk)` must fill `chunk`, which starts at element `first`.
/// Implementations may run chunks concurrently and in any order.
pub trait Executor: Sync {
    fn fill_chunks(
        &self,
        out: &mut [Complex64],
        chunk_len: usize,
        job: &(dyn Fn(usize, &mut [Complex64]) + Sync),
    );
}

/// Runs every chunk on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn fill_chunks(&self, out: &mut [Complex64], chunk_len: usize, job: &(dyn Fn(usize, &mut [Complex64]) + Sync)) {
        for (i, chunk) in out.chunks_mut(chunk_len.max(1)).enumerate() {
            job(i * chunk_len.max(1), chunk);
        }
    }
}

/// Wall-clock source for [`StepReport::wall_time`]; `()` reports nothing.
pub trait Stopwatch {
    fn start(&mut self);
    fn elapsed(&self) -> Option<Duration>;
}

impl Stopwatch for () {
    fn start(&mut self) {}

    fn elapsed(&self) -> Option<Duration> {
        None
    }
}

/// Interpretation and threshold knobs of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkSettings {
    /// Amplitudes with modulus below this are dropped after normalization.
    pub drop_threshold: f64,
    /// Weight above which a configuration counts toward the effective dimension.
    pub dimension_tolerance: f64,
    /// Applies `h_jk` twice per contribution instead of once.
    pub double_coin_factor: bool,
}

impl Default for WalkSettings {
    fn default() -> Self {
        Self { drop_threshold: 1e-14, dimension_tolerance: 1e-24, double_coin_factor: false }
    }
}

/// Per-step instrumentation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub step: u64,
    /// Norm of the shifted state before normalization, `K_r`.
    pub raw_norm: f64,
    /// Norm after normalization and compaction.
    pub norm: f64,
    pub entries: usize,
    pub effective_dimension: u64,
    pub wall_time: Option<Duration>,
}

impl StepReport {
    /// The report with timing stripped, for bit-exact comparisons.
    pub fn untimed(mut self) -> Self {
        self.wall_time = None;
        self
    }
}

#[derive(Clone, Copy, Debug)]
struct Pull {
    // index into the move table of the reverse edge `to -> from`
    reverse: usize,
    from: usize,
    to: usize,
}

/// Precomputed move table and coin weights for one graph, coin and particle number.
#[derive(Clone, Debug)]
pub struct ShiftKernel {
    space: ConfigSpace,
    order: usize,
    edges: usize,
    occupancy: Vec<u8>,
    // moves[rank * edges + e] = rank after moving one particle along edge e
    moves: Vec<u32>,
    pulls: Vec<Vec<Pull>>,
    weights: Vec<Complex64>,
    root: Vec<f64>,
}

impl ShiftKernel {
    pub fn new(graph: &GraphSpec, coin: &CoinMatrix, particles: u32, double_coin_factor: bool) -> Result<Self> {
        let graph = graph.clone().validated()?;
        if graph.coin_order() != coin.order() {
            return Err(Error::DimensionMismatch {
                what: "coin order",
                expected: graph.coin_order(),
                found: coin.order(),
            });
        }
        let m = graph.vertices();
        let space = ConfigSpace::new(particles, m)?;
        let dim = space.dimension();
        if particles > u32::from(u8::MAX) || dim >= u64::from(NO_MOVE) || usize::try_from(dim).is_err() {
            return Err(Error::SpaceTooLarge { particles, vertices: m });
        }
        let dim = dim as usize;
        let edge_list: Vec<Edge> = graph.directed_edges();
        let edges = edge_list.len();

        let mut occupancy = alloc::vec![0u8; dim * m];
        let mut moves = alloc::vec![NO_MOVE; dim * edges];
        let mut scratch = alloc::vec![0u8; m];
        for rank in 0..dim {
            space.unrank_into(rank as u64, &mut scratch);
            occupancy[rank * m..(rank + 1) * m].copy_from_slice(&scratch);
            for (e, edge) in edge_list.iter().enumerate() {
                if scratch[edge.from] == 0 {
                    continue;
                }
                scratch[edge.from] -= 1;
                scratch[edge.to] += 1;
                moves[rank * edges + e] = space.rank_unchecked(&scratch) as u32;
                scratch[edge.to] -= 1;
                scratch[edge.from] += 1;
            }
        }

        let pulls = graph
            .components()
            .iter()
            .map(|component| {
                component
                    .iter()
                    .map(|edge| Pull {
                        reverse: edge_list.binary_search(&edge.reversed()).expect("union is symmetric"),
                        from: edge.from,
                        to: edge.to,
                    })
                    .collect()
            })
            .collect();

        let d = coin.order();
        let weights = (0..d * d)
            .map(|i| {
                let h = coin.rows()[i];
                if double_coin_factor {
                    h * h
                } else {
                    h
                }
            })
            .collect();
        let n = particles as usize;
        let root = (0..=(n + 1) * (n + 1)).map(|x| libm::sqrt(x as f64)).collect();

        Ok(Self { space, order: d, edges, occupancy, moves, pulls, weights, root })
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn coin_order(&self) -> usize {
        self.order
    }

    fn dim(&self) -> usize {
        self.space.dimension() as usize
    }

    /// Occupations of `rank`.
    pub fn occupations(&self, rank: u64) -> &[u8] {
        let m = self.space.vertices();
        let r = rank as usize;
        &self.occupancy[r * m..(r + 1) * m]
    }

    /// Writes the shifted amplitudes of targets `first..first + out.len() / d`
    /// into `out`, laid out target-major (`out[t * d + j]`).
    fn gather(&self, source: &[Complex64], first: usize, out: &mut [Complex64]) {
        let d = self.order;
        let m = self.space.vertices();
        let dim = self.dim();
        let mut shifted = [ZERO; 16];
        let mut shifted_heap;
        let shifted: &mut [Complex64] = if d <= 16 {
            &mut shifted[..d]
        } else {
            shifted_heap = alloc::vec![ZERO; d];
            &mut shifted_heap
        };
        for (offset, cell) in out.chunks_exact_mut(d).enumerate() {
            let target = first + offset;
            let occ = &self.occupancy[target * m..(target + 1) * m];
            let moves = &self.moves[target * self.edges..(target + 1) * self.edges];
            for (k, pulls) in self.pulls.iter().enumerate() {
                let plane = &source[k * dim..(k + 1) * dim];
                let mut acc = ZERO;
                for p in pulls {
                    let arrived = occ[p.to] as usize;
                    if arrived == 0 {
                        continue;
                    }
                    let src = moves[p.reverse] as usize;
                    let amp = plane[src];
                    if amp == ZERO {
                        continue;
                    }
                    // source occupations: n_from = occ[from] + 1, n_to + 1 = occ[to]
                    let factor = self.root[(occ[p.from] as usize + 1) * arrived];
                    acc += amp * factor;
                }
                shifted[k] = acc;
            }
            for (j, slot) in cell.iter_mut().enumerate() {
                let row = &self.weights[j * d..(j + 1) * d];
                let mut acc = ZERO;
                for (h, s) in row.iter().zip(shifted.iter()) {
                    acc += h * s;
                }
                *slot = acc;
            }
        }
    }
}

/// Reusable dense buffers for repeated shifts.
#[derive(Clone, Debug, Default)]
struct Workspace {
    source: Vec<Complex64>,
    target: Vec<Complex64>,
}

fn check_table(table: &AmplitudeTable, kernel: &ShiftKernel) -> Result<()> {
    let space = kernel.space();
    if table.vertices() != space.vertices() {
        return Err(Error::DimensionMismatch {
            what: "vertex count",
            expected: space.vertices(),
            found: table.vertices(),
        });
    }
    if table.particles() != space.particles() {
        return Err(Error::DimensionMismatch {
            what: "particle count",
            expected: space.particles() as usize,
            found: table.particles() as usize,
        });
    }
    if table.coin_order() != kernel.coin_order() {
        return Err(Error::DimensionMismatch {
            what: "coin order",
            expected: kernel.coin_order(),
            found: table.coin_order(),
        });
    }
    Ok(())
}

fn shift_into(
    table: &AmplitudeTable,
    kernel: &ShiftKernel,
    exec: &dyn Executor,
    work: &mut Workspace,
) -> AmplitudeTable {
    let d = kernel.coin_order();
    let dim = kernel.dim();
    work.source.clear();
    work.source.resize(d * dim, ZERO);
    for (key, amp) in table.entries() {
        work.source[key.chirality as usize * dim + key.rank as usize] = *amp;
    }
    work.target.clear();
    work.target.resize(d * dim, ZERO);

    // fixed chunk size keeps the work split independent of the worker count
    const TARGETS_PER_CHUNK: usize = 4096;
    let source = &work.source;
    exec.fill_chunks(&mut work.target, TARGETS_PER_CHUNK * d, &|first, chunk| {
        kernel.gather(source, first / d, chunk)
    });

    let mut entries = Vec::with_capacity(table.len() * 2);
    for j in 0..d {
        for rank in 0..dim {
            let amp = work.target[rank * d + j];
            if amp != ZERO {
                entries.push((Key::new(j as u32, rank as u64), amp));
            }
        }
    }
    AmplitudeTable::from_raw(kernel.space(), d, entries)
}

/// One application of the conditional shift; the result is not normalized.
pub fn apply_conditional_shift(
    table: &AmplitudeTable,
    kernel: &ShiftKernel,
    exec: &dyn Executor,
) -> Result<AmplitudeTable> {
    check_table(table, kernel)?;
    Ok(shift_into(table, kernel, exec, &mut Workspace::default()))
}

/// A walk in progress: the current normalized state and its step counter.
#[derive(Clone, Debug)]
pub struct Walk {
    kernel: ShiftKernel,
    settings: WalkSettings,
    state: AmplitudeTable,
    step: u64,
    work: Workspace,
}

impl Walk {
    /// Starts a walk at step 0; `initial` is normalized and compacted.
    pub fn new(kernel: ShiftKernel, settings: WalkSettings, mut initial: AmplitudeTable) -> Result<Self> {
        check_table(&initial, &kernel)?;
        if settings.drop_threshold < 0.0 || settings.drop_threshold.is_nan() {
            return Err(Error::NegativeTolerance(settings.drop_threshold));
        }
        if settings.dimension_tolerance < 0.0 || settings.dimension_tolerance.is_nan() {
            return Err(Error::NegativeTolerance(settings.dimension_tolerance));
        }
        initial.normalize()?;
        initial.compact(settings.drop_threshold);
        Ok(Self::resume(kernel, settings, initial, 0))
    }

    /// Continues from a saved state taken at `step`, without renormalizing it.
    pub fn resume(kernel: ShiftKernel, settings: WalkSettings, state: AmplitudeTable, step: u64) -> Self {
        Self { kernel, settings, state, step, work: Workspace::default() }
    }

    pub fn state(&self) -> &AmplitudeTable {
        &self.state
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn kernel(&self) -> &ShiftKernel {
        &self.kernel
    }

    pub fn settings(&self) -> &WalkSettings {
        &self.settings
    }

    pub fn into_state(self) -> AmplitudeTable {
        self.state
    }

    /// Report describing the current state without advancing.
    pub fn report(&self) -> Result<StepReport> {
        Ok(StepReport {
            step: self.step,
            raw_norm: self.state.norm(),
            norm: libm::sqrt(self.state.norm_sqr()),
            entries: self.state.len(),
            effective_dimension: self.state.effective_dimension(self.settings.dimension_tolerance)?,
            wall_time: None,
        })
    }

    /// Shift, normalize and compact once.
    pub fn advance(&mut self, exec: &dyn Executor, clock: &mut dyn Stopwatch) -> Result<StepReport> {
        clock.start();
        let mut next = shift_into(&self.state, &self.kernel, exec, &mut self.work);
        next.normalize()?;
        next.compact(self.settings.drop_threshold);
        self.state = next;
        self.step += 1;
        let mut report = self.report()?;
        report.wall_time = clock.elapsed();
        Ok(report)
    }

    /// Advances `steps` times, calling `observer` on the normalized state
    /// first at the current step and then after every advance.
    ///
    /// An observer error aborts the run and is tagged with its step.
    pub fn run<E: core::fmt::Display>(
        &mut self,
        steps: u64,
        exec: &dyn Executor,
        clock: &mut dyn Stopwatch,
        mut observer: impl FnMut(&StepReport, &AmplitudeTable) -> core::result::Result<(), E>,
    ) -> Result<Vec<StepReport>> {
        let mut reports = Vec::with_capacity(steps as usize + 1);
        let first = self.report()?;
        observer(&first, &self.state).map_err(|e| observer_error(first.step, e))?;
        reports.push(first);
        for _ in 0..steps {
            let report = self.advance(exec, clock)?;
            observer(&report, &self.state).map_err(|e| observer_error(report.step, e))?;
            reports.push(report);
        }
        Ok(reports)
    }
}

fn observer_error(step: u64, e: impl core::fmt::Display) -> Error {
    Error::Observer { step, message: alloc::format!("{e}") }
}
