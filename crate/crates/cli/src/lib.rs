//! Command-line runner and file formats for [`bosewalk_core`].
//!
//! - [`config`]: TOML run configurations.
//! - [`graph_file`]: JSON graph files.
//! - [`snapshot`]: bit-exact binary snapshots.
//! - [`output`]: CSV observable series.
//! - [`exec`]: a scoped-thread executor and a wall clock.
//! - [`runner`]: `run`, `resume` and the oracle comparison.

pub mod config;
mod error;
pub mod exec;
pub mod graph_file;
pub mod output;
pub mod runner;
pub mod snapshot;

pub use error::{CliError, Result};
