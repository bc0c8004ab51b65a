use alloc::string::String;
use alloc::vec::Vec;

use crate::graph::Violation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("a graph needs at least one vertex")]
    NoVertices,
    #[error("unknown graph name `{0}`")]
    UnknownGraph(String),
    #[error("graph `{name}` cannot be built on {vertices} vertices")]
    IncompatibleVertexCount { name: &'static str, vertices: usize },
    #[error("invalid graph decomposition: {}", join_violations(.0))]
    InvalidGraph(Vec<Violation>),
    #[error("coin order must be at least 1")]
    ZeroCoinOrder,
    #[error("coin matrix is not {order}x{order}")]
    CoinShape { order: usize },
    #[error("coin matrix violates {property} (deviation {deviation:e})")]
    CoinInvariant { property: &'static str, deviation: f64 },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("configuration space of {particles} particles on {vertices} vertices is too large")]
    SpaceTooLarge { particles: u32, vertices: usize },
    #[error("rank {rank} out of range for a space of dimension {dimension}")]
    RankOutOfRange { rank: u64, dimension: u64 },
    #[error("configuration holds {found} particles, expected {expected}")]
    ParticleCount { expected: u32, found: u64 },
    #[error("chirality {chirality} out of range for coin order {order}")]
    ChiralityOutOfRange { chirality: usize, order: usize },
    #[error("vertex {vertex} out of range for a graph of {vertices} vertices")]
    VertexOutOfRange { vertex: usize, vertices: usize },
    #[error("mode {mode} out of range 1..={modes}")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("moment order must be positive")]
    ZeroMomentOrder,
    #[error("amplitude table has zero norm")]
    ZeroNorm,
    #[error("tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),
    #[error("dimension series is empty")]
    EmptySeries,
    #[error("dimension series steps must strictly increase (step {0})")]
    UnorderedSeries(u64),
    #[error("dense operator of dimension {dimension} exceeds the limit {limit}")]
    OracleTooLarge { dimension: usize, limit: usize },
    #[error("observer failed at step {step}: {message}")]
    Observer { step: u64, message: String },
}

fn join_violations(v: &[Violation]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, violation) in v.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{violation}");
    }
    out
}
