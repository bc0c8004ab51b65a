//! Dense reference implementation for small instances.
//!
//! The step operator is assembled as an explicit `dD x dD` matrix from its
//! own enumeration of configurations and its own edge iteration. Nothing is
//! shared with [`crate::evolution`], so agreement between the two engines is
//! meaningful.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::coin::CoinMatrix;
use crate::error::{Error, Result};
use crate::evolution::{Sequential, ShiftKernel, Walk, WalkSettings};
use crate::graph::GraphSpec;
use crate::statespace::{AmplitudeTable, ConfigSpace};

/// Largest basis size `d * D(N, M)` the oracle accepts.
pub const DENSE_LIMIT: usize = 5000;

/// The conditional shift followed by the coin, as a dense matrix.
///
/// Basis element `(j, l)` sits at index `j * D + l`, where `l` indexes the
/// oracle's own list of configurations.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    order: usize,
    configurations: Vec<Vec<u32>>,
    index: BTreeMap<Vec<u32>, usize>,
    // row-major, dimension x dimension
    matrix: Vec<Complex64>,
}

/// All weak compositions of `n` into `parts` parts, first entry descending.
fn enumerate(n: u32, parts: usize) -> Vec<Vec<u32>> {
    fn go(n: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=n).rev() {
            prefix.push(first);
            go(n - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        go(n, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// Builds the dense step operator of `graph` with `coin` for `particles` bosons.
///
/// Entry `((j, l1), (k, l))` is `h_jk * sqrt(n_from * (n_to + 1))` summed
/// over the component-`k` edges that move one particle of `l` into `l1`.
pub fn dense_step_matrix(graph: &GraphSpec, coin: &CoinMatrix, particles: u32) -> Result<DenseOperator> {
    let d = graph.coin_order();
    if coin.order() != d {
        return Err(Error::DimensionMismatch { what: "coin order", expected: d, found: coin.order() });
    }
    let m = graph.vertices();
    if m == 0 {
        return Err(Error::NoVertices);
    }
    // guard before enumerating
    let count = crate::statespace::space_dimension(particles, m)?;
    let dimension = (count as usize).saturating_mul(d);
    if count > DENSE_LIMIT as u128 || dimension > DENSE_LIMIT {
        return Err(Error::OracleTooLarge { dimension, limit: DENSE_LIMIT });
    }
    let configurations = enumerate(particles, m);
    let index: BTreeMap<Vec<u32>, usize> =
        configurations.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    let big_d = configurations.len();
    let mut matrix = alloc::vec![Complex64::new(0.0, 0.0); dimension * dimension];
    for k in 0..d {
        for (l, occ) in configurations.iter().enumerate() {
            for edge in graph.component(k) {
                let (from, to) = (edge.from, edge.to);
                if occ[from] == 0 {
                    continue;
                }
                let factor = libm::sqrt(f64::from(occ[from]) * f64::from(occ[to] + 1));
                let mut next = occ.clone();
                next[from] -= 1;
                next[to] += 1;
                let l1 = index[&next];
                let col = k * big_d + l;
                for j in 0..d {
                    let row = j * big_d + l1;
                    matrix[row * dimension + col] += coin.get(j, k) * factor;
                }
            }
        }
    }
    Ok(DenseOperator { order: d, configurations, index, matrix })
}

impl DenseOperator {
    pub fn dimension(&self) -> usize {
        self.order * self.configurations.len()
    }

    pub fn configurations(&self) -> &[Vec<u32>] {
        &self.configurations
    }

    /// Basis index of `(chirality, occupations)`, if it exists.
    pub fn basis_index(&self, chirality: usize, occupations: &[u32]) -> Option<usize> {
        (chirality < self.order)
            .then(|| self.index.get(occupations))
            .flatten()
            .map(|l| chirality * self.configurations.len() + l)
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dimension() + col]
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        let n = self.dimension();
        (0..n).map(|row| self.matrix[row * n + col]).collect()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dimension();
        self.matrix
            .chunks_exact(n)
            .map(|row| row.iter().zip(v).fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b))
            .collect()
    }

    /// Dense vector of a sparse table.
    pub fn embed(&self, table: &AmplitudeTable, space: &ConfigSpace) -> Result<Vec<Complex64>> {
        let mut v = alloc::vec![Complex64::new(0.0, 0.0); self.dimension()];
        for (key, amp) in table.entries() {
            let config = space.unrank(key.rank)?;
            let i = self
                .basis_index(key.chirality as usize, config.occupations())
                .ok_or(Error::DimensionMismatch {
                    what: "oracle basis",
                    expected: self.dimension(),
                    found: key.rank as usize,
                })?;
            v[i] = *amp;
        }
        Ok(v)
    }
}

fn normalize(v: &mut [Complex64]) -> Result<()> {
    let k = libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
    if !(k > 0.0) {
        return Err(Error::ZeroNorm);
    }
    for z in v {
        *z /= k;
    }
    Ok(())
}

/// Per-step sup-norm deviation between the sparse walk and the dense
/// operator, both normalized after every step. Index 0 is the initial state.
pub fn evolution_deviations(
    graph: &GraphSpec,
    coin: &CoinMatrix,
    initial: &AmplitudeTable,
    steps: u64,
    settings: WalkSettings,
) -> Result<Vec<f64>> {
    let dense = dense_step_matrix(graph, coin, initial.particles())?;
    if initial.vertices() != graph.vertices() {
        return Err(Error::DimensionMismatch {
            what: "vertex count",
            expected: graph.vertices(),
            found: initial.vertices(),
        });
    }
    let kernel = ShiftKernel::new(graph, coin, initial.particles(), settings.double_coin_factor)?;
    let space = kernel.space().clone();
    let mut vector = dense.embed(initial, &space)?;
    normalize(&mut vector)?;
    let mut walk = Walk::new(kernel, settings, initial.clone())?;
    let mut deviations = Vec::with_capacity(steps as usize + 1);
    let deviation = |walk: &Walk, vector: &[Complex64]| -> Result<f64> {
        let sparse = dense.embed(walk.state(), &space)?;
        Ok(sparse.iter().zip(vector).map(|(a, b)| libm::sqrt((a - b).norm_sqr())).fold(0.0, f64::max))
    };
    deviations.push(deviation(&walk, &vector)?);
    for _ in 0..steps {
        walk.advance(&Sequential, &mut ())?;
        vector = dense.apply(&vector);
        normalize(&mut vector)?;
        deviations.push(deviation(&walk, &vector)?);
    }
    Ok(deviations)
}

/// Largest per-step deviation of [`evolution_deviations`].
pub fn compare_evolution(graph: &GraphSpec, coin: &CoinMatrix, initial: &AmplitudeTable, steps: u64) -> Result<f64> {
    let deviations = evolution_deviations(graph, coin, initial, steps, WalkSettings::default())?;
    Ok(deviations.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphName;
    use crate::statespace::Key;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn cycle(m: usize) -> GraphSpec {
        GraphSpec::build_named(GraphName::Cycle, m).unwrap()
    }

    #[test]
    fn enumeration_matches_dimension() {
        assert_eq!(enumerate(2, 2), [[2, 0], [1, 1], [0, 2]]);
        assert_eq!(enumerate(3, 4).len(), 20);
        assert_eq!(enumerate(0, 3), [[0, 0, 0]]);
    }

    #[test]
    fn single_walker_column() {
        let g = cycle(3);
        let op = dense_step_matrix(&g, &CoinMatrix::hadamard(), 1).unwrap();
        assert_eq!(op.dimension(), 6);
        let col = op.column(op.basis_index(0, &[1, 0, 0]).unwrap());
        let nonzero: Vec<_> = col.iter().filter(|z| z.norm_sqr() > 0.0).collect();
        assert_eq!(nonzero.len(), 2);
        for z in nonzero {
            assert!((libm::sqrt(z.norm_sqr()) - FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn vacuum_is_zero() {
        let op = dense_step_matrix(&cycle(4), &CoinMatrix::hadamard(), 0).unwrap();
        assert_eq!(op.dimension(), 2);
        assert!(op.matrix.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn petersen_column_weights() {
        let g = GraphSpec::build_named(GraphName::PetersenCirculant, 10).unwrap();
        let op = dense_step_matrix(&g, &CoinMatrix::new(4).unwrap(), 1).unwrap();
        assert_eq!(op.dimension(), 40);
        for col in 0..40 {
            let weight: f64 = op.column(col).iter().map(|z| z.norm_sqr()).sum();
            assert!((weight - 1.0).abs() < 1e-14, "column {col}: {weight}");
        }
    }

    #[test]
    fn size_guard() {
        let g = cycle(10);
        assert!(matches!(
            dense_step_matrix(&g, &CoinMatrix::hadamard(), 12),
            Err(Error::OracleTooLarge { limit: DENSE_LIMIT, .. })
        ));
    }

    #[test]
    fn projector_form_for_one_walker() {
        // (H x I) S with S = |v1><v1| x sum |nu+1><nu| + |v2><v2| x sum |nu-1><nu|
        let m = 5;
        let h = CoinMatrix::hadamard();
        let n = 2 * m;
        let mut shift = alloc::vec![0.0; n * n];
        for nu in 0..m {
            shift[(nu + 1) % m * n + nu] = 1.0;
            shift[(m + (nu + m - 1) % m) * n + m + nu] = 1.0;
        }
        let op = dense_step_matrix(&cycle(m), &h, 1).unwrap();
        for row in 0..n {
            for col in 0..n {
                let (j, mu) = (row / m, row % m);
                let mut expected = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    expected += h.get(j, k) * shift[(k * m + mu) * n + col];
                }
                // oracle rows follow its own configuration order
                let mut occ = alloc::vec![0u32; m];
                occ[mu] = 1;
                let mut src = alloc::vec![0u32; m];
                src[col % m] = 1;
                let r = op.basis_index(j, &occ).unwrap();
                let c = op.basis_index(col / m, &src).unwrap();
                assert!((op.entry(r, c) - expected).norm_sqr() < 1e-30, "({row},{col})");
            }
        }
    }

    #[test]
    fn sparse_and_dense_agree() {
        let g = cycle(4);
        let space = ConfigSpace::new(2, 4).unwrap();
        let init = AmplitudeTable::from_entries(
            &space,
            2,
            [(Key::new(0, 0), Complex64::new(0.0, -1.0)), (Key::new(1, 6), Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let dev = compare_evolution(&g, &CoinMatrix::hadamard(), &init, 20).unwrap();
        assert!(dev <= 1e-10, "{dev:e}");
        assert_eq!(compare_evolution(&g, &CoinMatrix::hadamard(), &init, 0).unwrap(), 0.0);
    }
}
