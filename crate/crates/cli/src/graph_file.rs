//! JSON graph files.
//!
//! ```json
//! {
//!   "name": "cycle",
//!   "vertices": 4,
//!   "coin_order": 2,
//!   "components": [[[1, 2], [2, 3], [3, 4], [4, 1]], [[2, 1], [3, 2], [4, 3], [1, 4]]],
//!   "pairing": [[1, 2]]
//! }
//! ```
//!
//! Vertices and components are one-based. Edges are written sorted within
//! each component, so a spec serializes to one canonical text.

use std::fs;
use std::path::Path;

use bosewalk_core::{Edge, GraphSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub vertices: usize,
    pub coin_order: usize,
    pub components: Vec<Vec<[usize; 2]>>,
    #[serde(default)]
    pub pairing: Vec<[usize; 2]>,
}

impl GraphFile {
    pub fn from_spec(spec: &GraphSpec) -> Self {
        Self {
            name: spec.name().map(str::to_owned),
            vertices: spec.vertices(),
            coin_order: spec.coin_order(),
            components: spec
                .components()
                .iter()
                .map(|c| c.iter().map(|e| [e.from + 1, e.to + 1]).collect())
                .collect(),
            pairing: spec.pairing().iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
        }
    }

    /// The spec before validation; rejects only what cannot be represented.
    pub fn to_unchecked_spec(&self) -> Result<GraphSpec> {
        if self.coin_order != self.components.len() {
            return Err(CliError::config(
                "graph",
                format!("coin_order {} but {} components", self.coin_order, self.components.len()),
            ));
        }
        let zero_based = |label: usize| {
            label.checked_sub(1).ok_or_else(|| CliError::config("graph", "labels are one-based; found 0"))
        };
        let components = self
            .components
            .iter()
            .map(|c| c.iter().map(|&[a, b]| Ok(Edge::new(zero_based(a)?, zero_based(b)?))).collect())
            .collect::<Result<Vec<Vec<Edge>>>>()?;
        let pairing =
            self.pairing.iter().map(|&[a, b]| Ok((zero_based(a)?, zero_based(b)?))).collect::<Result<Vec<_>>>()?;
        let spec = GraphSpec::from_parts(self.vertices, components, pairing);
        Ok(match &self.name {
            Some(name) => spec.with_name(name.clone()),
            None => spec,
        })
    }

    pub fn to_spec(&self) -> Result<GraphSpec> {
        self.to_unchecked_spec()?.validated().map_err(|e| CliError::config("graph", e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph files always serialize")
    }
}

pub fn parse_graph(text: &str) -> Result<GraphFile> {
    serde_json::from_str(text).map_err(|e| CliError::config("graph", e))
}

/// Reads and validates a graph file.
pub fn load_graph(path: &Path) -> Result<GraphSpec> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_graph(&text)?.to_spec()
}

pub fn write_graph(spec: &GraphSpec, path: &Path) -> Result<()> {
    fs::write(path, GraphFile::from_spec(spec).to_json() + "\n").map_err(CliError::io(path))
}

/// SHA-256 of the canonical topology, ignoring the name.
pub fn topology_digest(spec: &GraphSpec) -> [u8; 32] {
    let mut file = GraphFile::from_spec(spec);
    file.name = None;
    Sha256::digest(serde_json::to_vec(&file).expect("graph files always serialize")).into()
}
