//! The coin tossing operator: a `d x d` unitary of normalized roots of unity.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

const UNITARY_TOLERANCE: f64 = 1e-12;

/// Row-major coin `h[j][k]`, mixing input chirality `k` into output chirality `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinMatrix {
    order: usize,
    entries: Vec<Complex64>,
}

impl CoinMatrix {
    /// The default coin of order `d`: the real Hadamard for `d = 2` and the
    /// discrete Fourier matrix `omega^(j k) / sqrt(d)` otherwise.
    pub fn new(order: usize) -> Result<Self> {
        match order {
            0 => Err(Error::ZeroCoinOrder),
            2 => Ok(Self::hadamard()),
            d => Ok(Self::fourier(d)),
        }
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { order: 2, entries: alloc::vec![h, h, h, -h] }
    }

    fn fourier(d: usize) -> Self {
        let scale = 1.0 / libm::sqrt(d as f64);
        let mut entries = Vec::with_capacity(d * d);
        for j in 0..d {
            for k in 0..d {
                entries.push(root_of_unity((j * k) % d, d) * scale);
            }
        }
        Self { order: d, entries }
    }

    /// Wraps an explicit row-major matrix after checking unitarity and that
    /// every entry has modulus `1/sqrt(d)`.
    pub fn from_rows(order: usize, entries: Vec<Complex64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::ZeroCoinOrder);
        }
        if entries.len() != order * order {
            return Err(Error::CoinShape { order });
        }
        let coin = Self { order, entries };
        let modulus = 1.0 / libm::sqrt(order as f64);
        let worst_modulus = coin
            .entries
            .iter()
            .map(|h| libm::fabs(libm::sqrt(h.norm_sqr()) - modulus))
            .fold(0.0, f64::max);
        if worst_modulus > UNITARY_TOLERANCE {
            return Err(Error::CoinInvariant { property: "entry modulus 1/sqrt(d)", deviation: worst_modulus });
        }
        let deviation = coin.unitarity_deviation();
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::CoinInvariant { property: "unitarity", deviation });
        }
        Ok(coin)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `h_jk`, zero-based.
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.entries[j * self.order + k]
    }

    pub fn rows(&self) -> &[Complex64] {
        &self.entries
    }

    /// Largest entrywise deviation of `h h^dagger` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.order;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    s += self.get(a, k) * self.get(b, k).conj();
                }
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max(libm::sqrt((s - target).norm_sqr()));
            }
        }
        worst
    }

    /// Coin applied to a coin-space vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.order)
            .map(|j| (0..self.order).fold(Complex64::new(0.0, 0.0), |acc, k| acc + self.get(j, k) * v[k]))
            .collect()
    }
}

/// `exp(2 pi i e / d)`, exact on the axes.
fn root_of_unity(e: usize, d: usize) -> Complex64 {
    if (4 * e) % d == 0 {
        return match (4 * e) / d {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let angle = 2.0 * PI * e as f64 / d as f64;
    Complex64::new(libm::cos(angle), libm::sin(angle))
}
