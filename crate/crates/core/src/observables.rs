//! Observables of a normalized walk state.
//!
//! Everything here is a function of the configuration probabilities
//! `P_l = sum_j |C_jl|^2` and the occupations of each configuration.
//! Sums run in ascending rank order so results are reproducible bit for bit.
//!
//! Vertices are zero-based in this API. The phase-space position of vertex
//! `a` is its one-based label `a + 1`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::statespace::{compositions, AmplitudeTable, ConfigSpace};

/// Denominators below this make `g2` undefined.
pub const G2_DENOMINATOR_FLOOR: f64 = 1e-15;

/// Configuration probabilities of a state together with their occupations.
///
/// Probabilities are divided by their sum, so a table that is normalized only
/// up to rounding still yields a distribution.
#[derive(Clone, Debug)]
pub struct ConfigDistribution {
    particles: u32,
    vertices: usize,
    ranks: Vec<u64>,
    probabilities: Vec<f64>,
    occupations: Vec<u32>,
}

impl ConfigDistribution {
    pub fn new(table: &AmplitudeTable, space: &ConfigSpace) -> Result<Self> {
        if table.vertices() != space.vertices() || table.particles() != space.particles() {
            return Err(Error::DimensionMismatch {
                what: "configuration space",
                expected: space.vertices(),
                found: table.vertices(),
            });
        }
        let weights = table.config_weights();
        let m = space.vertices();
        let mut ranks = Vec::with_capacity(weights.len());
        let mut probabilities = Vec::with_capacity(weights.len());
        let mut occupations = alloc::vec![0u32; weights.len() * m];
        for (i, (rank, p)) in weights.into_iter().enumerate() {
            if rank >= space.dimension() {
                return Err(Error::RankOutOfRange { rank, dimension: space.dimension() });
            }
            space.unrank_into(rank, &mut occupations[i * m..(i + 1) * m]);
            ranks.push(rank);
            probabilities.push(p);
        }
        // |C / K|^2 with K recomputed from the stored amplitudes
        let total: f64 = probabilities.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroNorm);
        }
        for p in &mut probabilities {
            *p /= total;
        }
        Ok(Self { particles: space.particles(), vertices: m, ranks, probabilities, occupations })
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    fn iter(&self) -> impl Iterator<Item = (f64, &[u32])> {
        self.probabilities.iter().copied().zip(self.occupations.chunks_exact(self.vertices))
    }

    fn check_vertex(&self, vertex: usize) -> Result<()> {
        if vertex >= self.vertices {
            return Err(Error::VertexOutOfRange { vertex, vertices: self.vertices });
        }
        Ok(())
    }

    pub fn probability(&self, rank: u64) -> f64 {
        match self.ranks.binary_search(&rank) {
            Ok(i) => self.probabilities[i],
            Err(_) => 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// `<n_a^q>`.
    pub fn moment(&self, vertex: usize, q: u32) -> Result<f64> {
        self.check_vertex(vertex)?;
        if q == 0 {
            return Err(Error::ZeroMomentOrder);
        }
        Ok(self.iter().fold(0.0, |acc, (p, occ)| acc + libm::pow(f64::from(occ[vertex]), f64::from(q)) * p))
    }

    pub fn densities(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.vertices];
        for (p, occ) in self.iter() {
            for (d, &n) in out.iter_mut().zip(occ) {
                *d += f64::from(n) * p;
            }
        }
        out
    }

    /// Normal-ordered pair moments `<n_a (n_b - [a = b])>`, row-major `M x M`.
    pub fn pair_moments(&self) -> Vec<f64> {
        let m = self.vertices;
        let mut out = alloc::vec![0.0; m * m];
        for (p, occ) in self.iter() {
            for a in 0..m {
                let na = f64::from(occ[a]);
                if na == 0.0 {
                    continue;
                }
                for b in 0..m {
                    let nb = f64::from(occ[b]) - if a == b { 1.0 } else { 0.0 };
                    out[a * m + b] += p * na * nb;
                }
            }
        }
        out
    }

    pub fn g2(&self, a: usize, b: usize) -> Result<Option<f64>> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        let mut numerator = 0.0;
        let mut mean_a = 0.0;
        let mut mean_b = 0.0;
        for (p, occ) in self.iter() {
            let na = f64::from(occ[a]);
            let nb = f64::from(occ[b]);
            numerator += p * na * (nb - if a == b { 1.0 } else { 0.0 });
            mean_a += p * na;
            mean_b += p * nb;
        }
        Ok(ratio(numerator, mean_a * mean_b))
    }

    /// `g2` for every ordered vertex pair, row-major.
    pub fn g2_matrix(&self) -> Vec<Option<f64>> {
        let m = self.vertices;
        let pairs = self.pair_moments();
        let dens = self.densities();
        (0..m * m).map(|i| ratio(pairs[i], dens[i / m] * dens[i % m])).collect()
    }

    /// Occupancy histogram `Q_n(a)` for `n = 0..=N`.
    pub fn occupancy_histogram(&self, vertex: usize) -> Result<Vec<f64>> {
        self.check_vertex(vertex)?;
        let mut q = alloc::vec![0.0; self.particles as usize + 1];
        for (p, occ) in self.iter() {
            q[occ[vertex] as usize] += p;
        }
        Ok(q)
    }

    pub fn counting_statistics(&self, vertex: usize, mode: CountingMode) -> Result<CountingStatistics> {
        let histogram = self.occupancy_histogram(vertex)?;
        let n = self.particles;
        let m = self.vertices as u128;
        let full = compositions(u128::from(n), m).expect("space exists") as f64;
        let total = self.total();
        let weighted = histogram
            .iter()
            .enumerate()
            .map(|(k, q)| {
                let rest = compositions(u128::from(n) - k as u128, m - 1).expect("bounded") as f64;
                let envelope = rest / (m as f64 * full);
                match mode {
                    CountingMode::Restricted => q * envelope,
                    CountingMode::Envelope => total * envelope,
                }
            })
            .collect();
        Ok(CountingStatistics { histogram, weighted })
    }

    /// Phase-space point of mode `eta` (one-based, `1..=N`).
    pub fn phase_space(&self, mode: usize) -> Result<PhasePoint> {
        let n = self.particles as usize;
        if mode == 0 || mode > n {
            return Err(Error::ModeOutOfRange { mode, modes: n });
        }
        let factors = PhaseFactors::new(self.particles);
        let mut aggregates = alloc::vec![PhaseAggregate::default(); self.vertices];
        for vertex in 0..self.vertices {
            let q = self.occupancy_histogram(vertex)?;
            aggregates[vertex] = factors.aggregate(&q);
        }
        Ok(factors.point(mode, &aggregates))
    }
}

fn ratio(numerator: f64, denominator: f64) -> Option<f64> {
    if denominator < G2_DENOMINATOR_FLOOR {
        None
    } else {
        Some(numerator / denominator)
    }
}

/// `(n! / n^n)^2`, with `W(0) = W(1) = 1`.
pub fn amplitude_weight(n: u32) -> f64 {
    let nf = f64::from(n);
    let root = (1..=n).fold(1.0, |acc, i| acc * f64::from(i) / nf);
    root * root
}

/// Number of weak compositions of `n` into `parts` parts, as a float.
pub fn composition_count(n: u32, parts: u32) -> f64 {
    compositions(u128::from(n), u128::from(parts)).map_or(f64::INFINITY, |c| c as f64)
}

#[derive(Clone, Copy, Debug, Default)]
struct PhaseAggregate {
    // sum_n Q_n W(n) Cmp(n, N)
    position: f64,
    // sum_n Q_n W(n) sum_m Cmp(n - m, N - 1) (m + 1/2)
    occupation: f64,
    // sum_n Q_n W(n) sum_m Cmp(n - m, N - 1)
    count: f64,
}

/// Per-occupation factors shared by all modes and vertices.
struct PhaseFactors {
    modes: u32,
    position: Vec<f64>,
    occupation: Vec<f64>,
    count: Vec<f64>,
}

impl PhaseFactors {
    fn new(particles: u32) -> Self {
        let n = particles;
        let mut position = Vec::new();
        let mut occupation = Vec::new();
        let mut count = Vec::new();
        for k in 0..=n {
            let w = amplitude_weight(k);
            position.push(w * composition_count(k, n));
            let mut occ = 0.0;
            let mut cnt = 0.0;
            for m in 0..=k {
                let c = composition_count(k - m, n.saturating_sub(1));
                occ += c * (f64::from(m) + 0.5);
                cnt += c;
            }
            occupation.push(w * occ);
            count.push(w * cnt);
        }
        Self { modes: n, position, occupation, count }
    }

    fn aggregate(&self, histogram: &[f64]) -> PhaseAggregate {
        let mut agg = PhaseAggregate::default();
        for (k, &q) in histogram.iter().enumerate() {
            agg.position += q * self.position[k];
            agg.occupation += q * self.occupation[k];
            agg.count += q * self.count[k];
        }
        agg
    }

    fn point(&self, mode: usize, aggregates: &[PhaseAggregate]) -> PhasePoint {
        let phase = 2.0 * PI * mode as f64 / f64::from(self.modes);
        let mut point = PhasePoint { x: 0.0, p: 0.0, energy: 0.0 };
        for (vertex, agg) in aggregates.iter().enumerate() {
            let site = (vertex + 1) as f64;
            point.x += agg.position * libm::cos(phase * site);
            point.p += agg.position * libm::sin(phase * site);
            point.energy += agg.occupation - agg.count * libm::cos(2.0 * phase * site);
        }
        point
    }
}

/// Position, momentum and energy of one mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
    pub energy: f64,
}

/// How the counting statistics weight the occupancy histogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CountingMode {
    /// Histogram of configurations with `n_a = n`, times the combinatorial envelope.
    #[default]
    Restricted,
    /// Total weight times the envelope, independent of the state.
    Envelope,
}

/// Counting statistics of one vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct CountingStatistics {
    /// `Q_n`: probability of exactly `n` particles on the vertex; sums to one.
    pub histogram: Vec<f64>,
    /// `Q_n * D(N - n, M - 1) / (M D(N, M))` (or the envelope variant).
    pub weighted: Vec<f64>,
}

/// `P_l` of a single configuration.
pub fn config_probability(table: &AmplitudeTable, space: &ConfigSpace, rank: u64) -> Result<f64> {
    if rank >= space.dimension() {
        return Err(Error::RankOutOfRange { rank, dimension: space.dimension() });
    }
    let total = table.norm_sqr();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let weight: f64 = (0..table.coin_order() as u32)
        .map(|j| table.get(crate::statespace::Key::new(j, rank)).norm_sqr())
        .sum();
    Ok(weight / total)
}

pub fn vertex_moment(table: &AmplitudeTable, space: &ConfigSpace, vertex: usize, q: u32) -> Result<f64> {
    ConfigDistribution::new(table, space)?.moment(vertex, q)
}

/// Second-order correlation of two vertices; `None` where the densities vanish.
pub fn g2(table: &AmplitudeTable, space: &ConfigSpace, a: usize, b: usize) -> Result<Option<f64>> {
    ConfigDistribution::new(table, space)?.g2(a, b)
}

pub fn counting_statistics(
    table: &AmplitudeTable,
    space: &ConfigSpace,
    vertex: usize,
    mode: CountingMode,
) -> Result<CountingStatistics> {
    ConfigDistribution::new(table, space)?.counting_statistics(vertex, mode)
}

pub fn phase_space(table: &AmplitudeTable, space: &ConfigSpace, mode: usize) -> Result<PhasePoint> {
    ConfigDistribution::new(table, space)?.phase_space(mode)
}

/// Which observable families to evaluate for a record.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableRequest {
    pub moments: Vec<u32>,
    pub g2: bool,
    pub counting: Option<CountingMode>,
    pub phase_space: bool,
}

impl Default for ObservableRequest {
    fn default() -> Self {
        Self { moments: alloc::vec![1, 2, 3], g2: true, counting: Some(CountingMode::Restricted), phase_space: true }
    }
}

/// Observables of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableRecord {
    pub step: u64,
    pub effective_dimension: u64,
    pub densities: Vec<f64>,
    /// `(q, <n_a^q> per vertex)`.
    pub moments: Vec<(u32, Vec<f64>)>,
    /// Row-major `M x M`; empty when not requested.
    pub g2: Vec<Option<f64>>,
    /// Per vertex; empty when not requested.
    pub counting: Vec<CountingStatistics>,
    /// Vertex average of the per-vertex statistics.
    pub counting_mean: Option<CountingStatistics>,
    /// Modes `1..=N` in order; empty when not requested.
    pub phase_space: Vec<PhasePoint>,
}

impl ObservableRecord {
    pub fn compute(
        step: u64,
        table: &AmplitudeTable,
        space: &ConfigSpace,
        effective_dimension: u64,
        request: &ObservableRequest,
    ) -> Result<Self> {
        let dist = ConfigDistribution::new(table, space)?;
        let m = space.vertices();
        let moments = request
            .moments
            .iter()
            .map(|&q| Ok((q, (0..m).map(|a| dist.moment(a, q)).collect::<Result<Vec<_>>>()?)))
            .collect::<Result<Vec<_>>>()?;
        let g2 = if request.g2 { dist.g2_matrix() } else { Vec::new() };
        let counting = match request.counting {
            Some(mode) => (0..m).map(|a| dist.counting_statistics(a, mode)).collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let counting_mean = (!counting.is_empty()).then(|| {
            let len = counting[0].histogram.len();
            let mut mean = CountingStatistics { histogram: alloc::vec![0.0; len], weighted: alloc::vec![0.0; len] };
            for stats in &counting {
                for k in 0..len {
                    mean.histogram[k] += stats.histogram[k] / m as f64;
                    mean.weighted[k] += stats.weighted[k] / m as f64;
                }
            }
            mean
        });
        let phase_space = if request.phase_space && space.particles() > 0 {
            let factors = PhaseFactors::new(space.particles());
            let aggregates = (0..m)
                .map(|a| Ok(factors.aggregate(&dist.occupancy_histogram(a)?)))
                .collect::<Result<Vec<_>>>()?;
            (1..=space.particles() as usize).map(|eta| factors.point(eta, &aggregates)).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            step,
            effective_dimension,
            densities: dist.densities(),
            moments,
            g2,
            counting,
            counting_mean,
            phase_space,
        })
    }
}

/// Identifier of the rule implemented by [`detect_regime_change`].
pub const REGIME_RULE: &str = "terminal-two-values";

/// Outcome of [`detect_regime_change`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegimeChange {
    /// First step of the terminal regime; `None` when the tail is too short to tell.
    pub step: Option<u64>,
    /// Dimension values of the terminal regime, ascending; empty without a change.
    pub terminal: Vec<u64>,
    pub rule: &'static str,
}

/// Finds the first step after which the effective dimension only takes one
/// value, or two values that each occur at least twice.
///
/// A regime that only covers the last three or fewer points is reported as
/// no change.
pub fn detect_regime_change(series: &[(u64, u64)]) -> Result<RegimeChange> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    for w in series.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::UnorderedSeries(w[1].0));
        }
    }
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    let mut first = None;
    for i in (0..series.len()).rev() {
        *counts.entry(series[i].1).or_default() += 1;
        if counts.len() > 2 {
            break;
        }
        if counts.len() == 1 || counts.values().all(|&c| c >= 2) {
            first = Some(i);
        }
    }
    let none = RegimeChange { step: None, terminal: Vec::new(), rule: REGIME_RULE };
    let Some(i) = first else { return Ok(none) };
    if series.len() - i <= 3 {
        return Ok(none);
    }
    let mut terminal: Vec<u64> = series[i..].iter().map(|&(_, d)| d).collect();
    terminal.sort_unstable();
    terminal.dedup();
    Ok(RegimeChange { step: Some(series[i].0), terminal, rule: REGIME_RULE })
}
