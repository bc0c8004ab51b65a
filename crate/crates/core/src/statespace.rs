//! Bosonic configuration space and the sparse amplitude table.
//!
//! Configurations of `N` bosons on `M` vertices are the weak compositions of
//! `N` into `M` parts. They are ranked lexicographically with the first
//! occupation descending, so for `N = 2, M = 2` the order is
//! `(2,0), (1,1), (0,2)`.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Number of configurations of `particles` bosons on `vertices` vertices,
/// `binomial(M + N - 1, N)`, exact for all `N, M <= 64`.
pub fn space_dimension(particles: u32, vertices: usize) -> Result<u128> {
    if vertices == 0 {
        return Err(Error::NoVertices);
    }
    compositions(particles as u128, vertices as u128).ok_or(Error::SpaceTooLarge { particles, vertices })
}

/// Weak compositions of `n` into `parts` parts, `None` on overflow.
/// `parts == 0` counts only the empty composition of zero.
pub(crate) fn compositions(n: u128, parts: u128) -> Option<u128> {
    if parts == 0 {
        return Some(u128::from(n == 0));
    }
    // binomial(n + parts - 1, k) with k = min(n, parts - 1)
    let top = n + parts - 1;
    let k = n.min(parts - 1);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc * (top - k + i) is divisible by i after the multiplication
        let factor = top - k + i;
        let g = gcd(acc, i);
        let (a, d) = (acc / g, i / g);
        acc = a.checked_mul(factor / d)?;
    }
    Some(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Occupation-number vector over the vertices of a graph.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Configuration(Vec<u32>);

impl Configuration {
    pub fn new(occupations: Vec<u32>) -> Self {
        Self(occupations)
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn vertices(&self) -> usize {
        self.0.len()
    }

    pub fn particles(&self) -> u64 {
        self.0.iter().map(|&n| u64::from(n)).sum()
    }

    /// The configuration with one particle moved `from -> to`, if `from` is occupied.
    pub fn moved(&self, from: usize, to: usize) -> Option<Self> {
        if self.0[from] == 0 {
            return None;
        }
        let mut next = self.0.clone();
        next[from] -= 1;
        next[to] += 1;
        Some(Self(next))
    }
}

impl From<Vec<u32>> for Configuration {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str(">")
    }
}

/// Ranking and unranking of all configurations of a fixed `(N, M)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigSpace {
    particles: u32,
    vertices: usize,
    dimension: u64,
    // counts[n * (vertices + 1) + k] = D(n, k)
    counts: Vec<u64>,
}

impl ConfigSpace {
    pub fn new(particles: u32, vertices: usize) -> Result<Self> {
        let dimension = space_dimension(particles, vertices)?;
        let dimension = u64::try_from(dimension).map_err(|_| Error::SpaceTooLarge { particles, vertices })?;
        let stride = vertices + 1;
        let mut counts = Vec::with_capacity((particles as usize + 1) * stride);
        for n in 0..=u128::from(particles) {
            for k in 0..=vertices as u128 {
                // every partial count is bounded by the full dimension
                let c = compositions(n, k).expect("bounded by dimension");
                counts.push(c as u64);
            }
        }
        Ok(Self { particles, vertices, dimension, counts })
    }

    pub fn particles(&self) -> u32 {
        self.particles
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn dimension(&self) -> u64 {
        self.dimension
    }

    /// `D(n, k)` for `n <= N`, `k <= M`.
    #[inline]
    pub fn count(&self, n: u32, k: usize) -> u64 {
        self.counts[n as usize * (self.vertices + 1) + k]
    }

    pub fn rank(&self, config: &Configuration) -> Result<u64> {
        let occ = config.occupations();
        if occ.len() != self.vertices {
            return Err(Error::DimensionMismatch {
                what: "configuration length",
                expected: self.vertices,
                found: occ.len(),
            });
        }
        let total = config.particles();
        if total != u64::from(self.particles) {
            return Err(Error::ParticleCount { expected: self.particles, found: total });
        }
        Ok(self.rank_unchecked(occ))
    }

    /// Rank of an occupation slice already known to hold `N` particles on `M` vertices.
    #[inline]
    pub fn rank_unchecked<T: Copy + Into<u32>>(&self, occ: &[T]) -> u64 {
        let m = self.vertices;
        let mut remaining = self.particles;
        let mut rank = 0u64;
        for (i, &n) in occ[..m - 1].iter().enumerate() {
            remaining -= n.into();
            if remaining > 0 {
                // configurations sharing the prefix with a larger value here
                rank += self.count(remaining - 1, m - i);
            }
        }
        rank
    }

    pub fn unrank(&self, rank: u64) -> Result<Configuration> {
        if rank >= self.dimension {
            return Err(Error::RankOutOfRange { rank, dimension: self.dimension });
        }
        let mut occ = alloc::vec![0u32; self.vertices];
        self.unrank_into(rank, &mut occ);
        Ok(Configuration(occ))
    }

    /// Writes the occupations of `rank` into `out` (length `M`); `rank` must be in range.
    pub fn unrank_into<T: From<u8> + TryFrom<u32>>(&self, mut rank: u64, out: &mut [T])
    where
        <T as TryFrom<u32>>::Error: fmt::Debug,
    {
        let m = self.vertices;
        let mut remaining = self.particles;
        for (i, slot) in out[..m - 1].iter_mut().enumerate() {
            let tail = m - i - 1;
            let mut value = remaining;
            loop {
                let block = self.count(remaining - value, tail);
                if rank < block {
                    break;
                }
                rank -= block;
                value -= 1;
            }
            *slot = T::try_from(value).expect("occupation fits");
            remaining -= value;
        }
        out[m - 1] = T::try_from(remaining).expect("occupation fits");
    }

    /// Iterates all configurations in rank order.
    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.dimension).map(move |r| self.unrank(r).expect("rank in range"))
    }
}

/// Basis label of the walk state: zero-based chirality and configuration rank.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Key {
    pub chirality: u32,
    pub rank: u64,
}

impl Key {
    pub const fn new(chirality: u32, rank: u64) -> Self {
        Self { chirality, rank }
    }
}

/// Sparse walk state: amplitudes keyed by `(chirality, rank)`, sorted by key.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeTable {
    particles: u32,
    vertices: usize,
    coin_order: usize,
    entries: Vec<(Key, Complex64)>,
    /// Normalization constant divided out by the last [`normalize`](Self::normalize).
    norm: f64,
}

impl AmplitudeTable {
    /// Builds a table from unordered entries; duplicate keys are summed.
    pub fn from_entries(
        space: &ConfigSpace,
        coin_order: usize,
        entries: impl IntoIterator<Item = (Key, Complex64)>,
    ) -> Result<Self> {
        let mut entries: Vec<_> = entries.into_iter().collect();
        for (key, _) in &entries {
            if key.chirality as usize >= coin_order {
                return Err(Error::ChiralityOutOfRange { chirality: key.chirality as usize, order: coin_order });
            }
            if key.rank >= space.dimension() {
                return Err(Error::RankOutOfRange { rank: key.rank, dimension: space.dimension() });
            }
        }
        entries.sort_by_key(|(k, _)| *k);
        entries.dedup_by(|later, kept| {
            if later.0 == kept.0 {
                kept.1 += later.1;
                true
            } else {
                false
            }
        });
        Ok(Self {
            particles: space.particles(),
            vertices: space.vertices(),
            coin_order,
            entries,
            norm: 1.0,
        })
    }

    /// Builds a table from `(chirality, configuration, amplitude)` terms.
    pub fn from_configurations(
        space: &ConfigSpace,
        coin_order: usize,
        terms: impl IntoIterator<Item = (usize, Configuration, Complex64)>,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for (chirality, config, amplitude) in terms {
            let rank = space.rank(&config)?;
            entries.push((Key::new(chirality as u32, rank), amplitude));
        }
        Self::from_entries(space, coin_order, entries)
    }

    /// Reassembles a table from parts already sorted by key, e.g. a snapshot.
    pub fn from_sorted_parts(
        space: &ConfigSpace,
        coin_order: usize,
        entries: Vec<(Key, Complex64)>,
        norm: f64,
    ) -> Result<Self> {
        let mut table = Self::from_entries(space, coin_order, entries)?;
        table.norm = norm;
        Ok(table)
    }

    pub(crate) fn from_raw(space: &ConfigSpace, coin_order: usize, entries: Vec<(Key, Complex64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self {
            particles: space.particles(),
            vertices: space.vertices(),
            coin_order,
            entries,
            norm: 1.0,
        }
    }

    pub fn particles(&self) -> u32 {
        self.particles
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn coin_order(&self) -> usize {
        self.coin_order
    }

    pub fn entries(&self) -> &[(Key, Complex64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn get(&self, key: Key) -> Complex64 {
        match self.entries.binary_search_by_key(&key, |(k, _)| *k) {
            Ok(i) => self.entries[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// `sum |C|^2` accumulated in key order.
    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, (_, c)| acc + c.norm_sqr())
    }

    /// Scales the table to unit norm and returns the constant divided out.
    pub fn normalize(&mut self) -> Result<f64> {
        let k = libm::sqrt(self.norm_sqr());
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::ZeroNorm);
        }
        for (_, c) in &mut self.entries {
            *c /= k;
        }
        self.norm = k;
        Ok(k)
    }

    /// Returns `(K, normalized copy)`.
    pub fn normalized(&self) -> Result<(f64, Self)> {
        let mut t = self.clone();
        let k = t.normalize()?;
        Ok((k, t))
    }

    /// Drops every amplitude with modulus below `threshold`; returns how many were removed.
    pub fn compact(&mut self, threshold: f64) -> usize {
        let before = self.entries.len();
        let cut = threshold * threshold;
        self.entries.retain(|(_, c)| c.norm_sqr() >= cut && *c != Complex64::new(0.0, 0.0));
        before - self.entries.len()
    }

    /// Configuration weights `P_l = sum_j |C_jl|^2`, sorted by rank.
    ///
    /// Each rank sums its chiralities in ascending order.
    pub fn config_weights(&self) -> Vec<(u64, f64)> {
        let mut runs: Vec<&[(Key, Complex64)]> = Vec::with_capacity(self.coin_order);
        let mut rest = &self.entries[..];
        while let Some((first, _)) = rest.first() {
            let split = rest.partition_point(|(k, _)| k.chirality == first.chirality);
            runs.push(&rest[..split]);
            rest = &rest[split..];
        }
        let mut heads = alloc::vec![0usize; runs.len()];
        let mut out = Vec::with_capacity(runs.first().map_or(0, |r| r.len()));
        loop {
            let mut next: Option<u64> = None;
            for (run, &h) in runs.iter().zip(&heads) {
                if let Some((k, _)) = run.get(h) {
                    next = Some(next.map_or(k.rank, |n| n.min(k.rank)));
                }
            }
            let Some(rank) = next else { break };
            let mut weight = 0.0;
            for (run, h) in runs.iter().zip(heads.iter_mut()) {
                if let Some((k, c)) = run.get(*h) {
                    if k.rank == rank {
                        weight += c.norm_sqr();
                        *h += 1;
                    }
                }
            }
            out.push((rank, weight));
        }
        out
    }

    /// Number of distinct ranks whose weight exceeds `tol`.
    pub fn effective_dimension(&self, tol: f64) -> Result<u64> {
        if tol < 0.0 || tol.is_nan() {
            return Err(Error::NegativeTolerance(tol));
        }
        Ok(self.config_weights().iter().filter(|(_, w)| *w > tol).count() as u64)
    }

    /// Checks that every stored rank lies in `space` (and so holds `N` particles).
    pub fn check_conservation(&self, space: &ConfigSpace) -> Result<()> {
        if space.particles() != self.particles || space.vertices() != self.vertices {
            return Err(Error::DimensionMismatch {
                what: "configuration space",
                expected: self.vertices,
                found: space.vertices(),
            });
        }
        let mut occ = alloc::vec![0u32; self.vertices];
        for (key, _) in &self.entries {
            if key.rank >= space.dimension() {
                return Err(Error::RankOutOfRange { rank: key.rank, dimension: space.dimension() });
            }
            space.unrank_into(key.rank, &mut occ);
            let total: u64 = occ.iter().map(|&n| u64::from(n)).sum();
            if total != u64::from(self.particles) {
                return Err(Error::ParticleCount { expected: self.particles, found: total });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dimension_values() {
        assert_eq!(space_dimension(12, 10).unwrap(), 293_930);
        assert_eq!(space_dimension(0, 5).unwrap(), 1);
        assert_eq!(space_dimension(2, 2).unwrap(), 3);
        // Pascal's triangle as an independent route to binomial(127, 64)
        let mut row = vec![1u128];
        for _ in 0..127 {
            let mut next = vec![1u128; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        assert_eq!(space_dimension(64, 64).unwrap(), row[64]);
        assert_eq!(space_dimension(3, 0), Err(Error::NoVertices));
    }

    #[test]
    fn pascal_recurrence() {
        for n in 1..20u32 {
            for m in 2..20usize {
                let lhs = space_dimension(n, m).unwrap();
                let rhs = space_dimension(n, m - 1).unwrap() + space_dimension(n - 1, m).unwrap();
                assert_eq!(lhs, rhs, "D({n},{m})");
            }
        }
    }

    #[test]
    fn order_endpoints() {
        let space = ConfigSpace::new(2, 2).unwrap();
        assert_eq!(space.unrank(0).unwrap().occupations(), &[2, 0]);
        assert_eq!(space.unrank(1).unwrap().occupations(), &[1, 1]);
        assert_eq!(space.unrank(2).unwrap().occupations(), &[0, 2]);
        assert_eq!(space.rank(&vec![2, 0].into()).unwrap(), 0);
        assert!(matches!(space.unrank(3), Err(Error::RankOutOfRange { .. })));
        assert!(matches!(space.rank(&vec![1, 0].into()), Err(Error::ParticleCount { .. })));
    }

    #[test]
    fn ranks_are_lexicographically_descending() {
        let space = ConfigSpace::new(3, 4).unwrap();
        let all: Vec<_> = space.iter().collect();
        assert_eq!(all.len(), 20);
        for w in all.windows(2) {
            assert!(w[0] > w[1], "{} then {}", w[0], w[1]);
        }
        for (r, cfg) in all.iter().enumerate() {
            assert_eq!(space.rank(cfg).unwrap(), r as u64);
        }
    }

    #[test]
    fn normalize_single_entry() {
        let space = ConfigSpace::new(1, 3).unwrap();
        let mut t = AmplitudeTable::from_entries(&space, 2, [(Key::new(0, 0), c(3.0, 4.0))]).unwrap();
        let k = t.normalize().unwrap();
        assert_eq!(k, 5.0);
        assert_eq!(t.get(Key::new(0, 0)), c(0.6, 0.8));
        let again = t.normalized().unwrap().1;
        assert_eq!(again.entries(), t.entries());
    }

    #[test]
    fn normalize_rejects_zero_table() {
        let space = ConfigSpace::new(1, 3).unwrap();
        let mut t = AmplitudeTable::from_entries(&space, 2, []).unwrap();
        assert_eq!(t.normalize(), Err(Error::ZeroNorm));
    }

    #[test]
    fn effective_dimension_counts_distinct_ranks() {
        let space = ConfigSpace::new(2, 4).unwrap();
        let entries = [
            (Key::new(0, 5), c(1.0, 0.0)),
            (Key::new(1, 5), c(0.0, 1.0)),
            (Key::new(1, 7), c(1.0, 0.0)),
        ];
        let t = AmplitudeTable::from_entries(&space, 2, entries).unwrap();
        assert_eq!(t.effective_dimension(0.0).unwrap(), 2);
        assert_eq!(t.config_weights(), vec![(5, 2.0), (7, 1.0)]);
        assert_eq!(t.effective_dimension(-1.0), Err(Error::NegativeTolerance(-1.0)));
    }

    #[test]
    fn duplicate_keys_are_summed() {
        let space = ConfigSpace::new(1, 2).unwrap();
        let t = AmplitudeTable::from_entries(
            &space,
            1,
            [(Key::new(0, 1), c(1.0, 0.0)), (Key::new(0, 1), c(0.5, 0.0))],
        )
        .unwrap();
        assert_eq!(t.entries(), &[(Key::new(0, 1), c(1.5, 0.0))]);
    }

    #[test]
    fn compaction_drops_small_amplitudes() {
        let space = ConfigSpace::new(1, 3).unwrap();
        let mut t = AmplitudeTable::from_entries(
            &space,
            1,
            [(Key::new(0, 0), c(1.0, 0.0)), (Key::new(0, 1), c(1e-15, 0.0)), (Key::new(0, 2), c(0.0, 0.0))],
        )
        .unwrap();
        assert_eq!(t.compact(1e-14), 2);
        assert_eq!(t.len(), 1);
    }
}
