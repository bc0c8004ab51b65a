//! Shared-coin many-boson discrete-time quantum walks on finite graphs.
//!
//! `N` indistinguishable bosons live on the `M` vertices of a graph. The walk
//! state is a superposition over pairs of a coin chirality `j` (one of `d`)
//! and an occupation-number configuration `n = (n_1, .., n_M)`. One step of
//! the walk moves a single particle along an edge of the directed adjacency
//! component selected by the chirality, weights the move by the bosonic
//! factor `sqrt(n_from * (n_to + 1))` and mixes chiralities with a single
//! coin shared by all particles. The state is renormalized after every step.
//!
//! The crate is `no_std` and only needs `alloc`. Threading, file formats and
//! the command line runner live in the `bosewalk` companion crate.
//!
//! # Layout
//!
//! - [`graph`]: topologies as decompositions into directed components.
//! - [`coin`]: the order-`d` coin of normalized roots of unity.
//! - [`statespace`]: configuration ranking and the sparse amplitude table.
//! - [`evolution`]: the conditional shift kernel and the step driver.
//! - [`observables`]: densities, moments, `g2`, counting statistics,
//!   phase-space points and regime-change detection.
//! - [`oracle`]: a dense reference implementation for small instances.
#![no_std]

extern crate alloc;

pub mod coin;
pub mod error;
pub mod evolution;
pub mod graph;
pub mod observables;
pub mod oracle;
pub mod statespace;

pub use num_complex::Complex64;

pub use coin::CoinMatrix;
pub use error::{Error, Result};
pub use evolution::{
    apply_conditional_shift, Executor, Sequential, ShiftKernel, StepReport, Stopwatch, Walk,
    WalkSettings,
};
pub use graph::{Edge, GraphName, GraphSpec, Violation};
pub use statespace::{space_dimension, AmplitudeTable, ConfigSpace, Configuration, Key};
pub use observables::{
    detect_regime_change, ConfigDistribution, CountingMode, CountingStatistics, ObservableRecord,
    ObservableRequest, PhasePoint, RegimeChange,
};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
