//! Graph topologies as decompositions of an undirected adjacency matrix into
//! directed components, one component per coin chirality.
//!
//! Vertices and components are zero-based here. Everything user facing
//! (violation messages, graph files, the CLI) uses one-based labels.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Directed edge `from -> to`, zero-based.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

impl Edge {
    pub const fn new(from: usize, to: usize) -> Self {
        Self { from, to }
    }

    pub const fn reversed(self) -> Self {
        Self { from: self.to, to: self.from }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GraphName {
    Cycle,
    DoubleHexagon,
    PetersenCirculant,
}

impl GraphName {
    pub const ALL: [GraphName; 3] = [GraphName::Cycle, GraphName::DoubleHexagon, GraphName::PetersenCirculant];

    pub fn as_str(self) -> &'static str {
        match self {
            GraphName::Cycle => "cycle",
            GraphName::DoubleHexagon => "double_hexagon",
            GraphName::PetersenCirculant => "petersen_circulant",
        }
    }
}

impl fmt::Display for GraphName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GraphName::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::UnknownGraph(s.into()))
    }
}

/// One broken invariant of a [`GraphSpec`]. Displayed with one-based labels.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    ComponentCount { declared: usize, found: usize },
    EdgeOutOfRange { component: usize, edge: Edge },
    SelfLoop { component: usize, vertex: usize },
    DuplicateEdge { component: usize, edge: Edge },
    /// `edge` is present in the union of components but its reverse is not.
    Asymmetric { edge: Edge },
    PairOutOfRange { first: usize, second: usize },
    PairNotTransposed { first: usize, second: usize },
    /// More than one outgoing (`outgoing == true`) or incoming edge at a vertex.
    NotPartialPermutation { component: usize, vertex: usize, outgoing: bool },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::ComponentCount { declared, found } => {
                write!(f, "coin order {declared} but {found} components")
            }
            Violation::EdgeOutOfRange { component, edge } => write!(
                f,
                "component {} edge {}->{} out of range",
                component + 1,
                edge.from + 1,
                edge.to + 1
            ),
            Violation::SelfLoop { component, vertex } => {
                write!(f, "component {} has self-loop at vertex {}", component + 1, vertex + 1)
            }
            Violation::DuplicateEdge { component, edge } => write!(
                f,
                "component {} repeats edge {}->{}",
                component + 1,
                edge.from + 1,
                edge.to + 1
            ),
            Violation::Asymmetric { edge } => write!(
                f,
                "edge {}->{} has no reverse in any component",
                edge.from + 1,
                edge.to + 1
            ),
            Violation::PairOutOfRange { first, second } => {
                write!(f, "pair ({},{}) names a missing component", first + 1, second + 1)
            }
            Violation::PairNotTransposed { first, second } => {
                write!(f, "pair ({},{}) not transposed", first + 1, second + 1)
            }
            Violation::NotPartialPermutation { component, vertex, outgoing } => write!(
                f,
                "component {} has several {} edges at vertex {}",
                component + 1,
                if outgoing { "outgoing" } else { "incoming" },
                vertex + 1
            ),
        }
    }
}

/// Vertex count, coin order and the directed adjacency components.
///
/// The coin order `d` equals the number of components.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GraphSpec {
    name: Option<String>,
    vertices: usize,
    components: Vec<Vec<Edge>>,
    pairing: Vec<(usize, usize)>,
}

impl GraphSpec {
    /// Assembles a spec without checking it. See [`validate`](Self::validate).
    pub fn from_parts(
        vertices: usize,
        components: Vec<Vec<Edge>>,
        pairing: Vec<(usize, usize)>,
    ) -> Self {
        let mut g = Self { name: None, vertices, components, pairing };
        for c in &mut g.components {
            c.sort();
        }
        g
    }

    /// Assembles a spec and rejects it if any invariant fails.
    pub fn new(vertices: usize, components: Vec<Vec<Edge>>, pairing: Vec<(usize, usize)>) -> Result<Self> {
        Self::from_parts(vertices, components, pairing).validated()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn validated(self) -> Result<Self> {
        if self.vertices == 0 {
            return Err(Error::NoVertices);
        }
        let report = self.validate();
        if report.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidGraph(report))
        }
    }

    pub fn build_named(name: GraphName, vertices: usize) -> Result<Self> {
        let incompatible = Error::IncompatibleVertexCount { name: name.as_str(), vertices };
        match name {
            GraphName::Cycle => {
                if vertices < 3 {
                    return Err(incompatible);
                }
                let forward: Vec<_> = (0..vertices).map(|v| Edge::new(v, (v + 1) % vertices)).collect();
                let backward = forward.iter().map(|e| e.reversed()).collect();
                Self::new(vertices, alloc::vec![forward, backward], alloc::vec![(0, 1)])
            }
            GraphName::PetersenCirculant => {
                if vertices != 10 {
                    return Err(incompatible);
                }
                let shifted = |delta: usize| (0..10).map(|v| Edge::new(v, (v + delta) % 10)).collect::<Vec<_>>();
                Self::new(10, alloc::vec![shifted(1), shifted(9), shifted(5), shifted(5)], alloc::vec![(0, 1), (2, 3)])
            }
            GraphName::DoubleHexagon => {
                if vertices != 10 {
                    return Err(incompatible);
                }
                // hexagons (1,2,3,4,5,6) and (1,6,7,8,9,10) share the edge {1,6}
                let cycles: [&[usize]; 2] = [&[0, 1, 2, 3, 4, 5], &[0, 5, 6, 7, 8, 9]];
                let forward: Vec<_> = cycles
                    .iter()
                    .flat_map(|c| (0..c.len()).map(move |i| Edge::new(c[i], c[(i + 1) % c.len()])))
                    .collect();
                let backward = forward.iter().map(|e| e.reversed()).collect();
                Self::new(10, alloc::vec![forward, backward], alloc::vec![(0, 1)])
            }
        }
        .map(|g| g.with_name(name.as_str()))
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn coin_order(&self) -> usize {
        self.components.len()
    }

    /// Edges of component `k`, sorted.
    pub fn component(&self, k: usize) -> &[Edge] {
        &self.components[k]
    }

    pub fn components(&self) -> &[Vec<Edge>] {
        &self.components
    }

    pub fn pairing(&self) -> &[(usize, usize)] {
        &self.pairing
    }

    /// Distinct directed edges over all components, sorted.
    pub fn directed_edges(&self) -> Vec<Edge> {
        let set: BTreeSet<Edge> = self.components.iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    /// Undirected neighbours of `vertex`, sorted.
    pub fn neighbors(&self, vertex: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .components
            .iter()
            .flatten()
            .filter_map(|e| match (e.from == vertex, e.to == vertex) {
                (true, _) => Some(e.to),
                (_, true) => Some(e.from),
                _ => None,
            })
            .collect();
        set.into_iter().collect()
    }

    /// All broken invariants; empty when the decomposition is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut report = Vec::new();
        let m = self.vertices;
        let mut union = BTreeSet::new();
        for (k, component) in self.components.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &edge in component {
                if edge.from >= m || edge.to >= m {
                    report.push(Violation::EdgeOutOfRange { component: k, edge });
                    continue;
                }
                if edge.from == edge.to {
                    report.push(Violation::SelfLoop { component: k, vertex: edge.from });
                    continue;
                }
                if !seen.insert(edge) {
                    report.push(Violation::DuplicateEdge { component: k, edge });
                    continue;
                }
                union.insert(edge);
            }
        }
        for &edge in &union {
            if !union.contains(&edge.reversed()) {
                report.push(Violation::Asymmetric { edge });
            }
        }
        for &(first, second) in &self.pairing {
            if first >= self.components.len() || second >= self.components.len() {
                report.push(Violation::PairOutOfRange { first, second });
                continue;
            }
            let mut transposed: Vec<Edge> = self.components[second].iter().map(|e| e.reversed()).collect();
            transposed.sort();
            if transposed != self.components[first] {
                report.push(Violation::PairNotTransposed { first, second });
            }
        }
        report
    }

    /// Vertices where a component is not a partial permutation.
    ///
    /// Kept apart from [`validate`](Self::validate): a vertex of degree three
    /// cannot be split into two partial permutations, so any coin-order-two
    /// reading of a graph with such a vertex (the double hexagon) has defects
    /// here while still being a valid symmetric decomposition.
    pub fn permutation_defects(&self) -> Vec<Violation> {
        let m = self.vertices;
        let mut defects = Vec::new();
        for (k, component) in self.components.iter().enumerate() {
            let mut out_degree = alloc::vec![0usize; m];
            let mut in_degree = alloc::vec![0usize; m];
            for e in component.iter().filter(|e| e.from < m && e.to < m) {
                out_degree[e.from] += 1;
                in_degree[e.to] += 1;
            }
            for v in 0..m {
                if out_degree[v] > 1 {
                    defects.push(Violation::NotPartialPermutation { component: k, vertex: v, outgoing: true });
                }
                if in_degree[v] > 1 {
                    defects.push(Violation::NotPartialPermutation { component: k, vertex: v, outgoing: false });
                }
            }
        }
        defects
    }
}
