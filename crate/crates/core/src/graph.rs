//! Immutable directed weighted graph.
//!
//! Nodes are dense ids `0..n`. Edges are stored twice in CSR form: once in
//! the out-adjacency (sorted by `(src, dst)`, which also defines the edge id
//! used by every per-edge array in the crate) and once in the in-adjacency
//! (sorted by `(dst, src)`, pointing back at the edge id).

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use serde::{Deserialize, Serialize};

/// Dense node identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn new(index: usize) -> Self {
        NodeId(index as u32)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One directed edge as seen from an adjacency query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeView {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GraphError {
    InvalidNode { node: u32, node_count: usize },
    NegativeWeight { src: u32, dst: u32, weight: f64 },
    NonFiniteWeight { src: u32, dst: u32 },
    LabelCountMismatch { labels: usize, node_count: usize },
    DuplicateLabel(String),
    TooManyNodes(usize),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::InvalidNode { node, node_count } => {
                write!(f, "node id {node} out of range (graph has {node_count} nodes)")
            }
            GraphError::NegativeWeight { src, dst, weight } => {
                write!(f, "edge {src}->{dst} has negative weight {weight}")
            }
            GraphError::NonFiniteWeight { src, dst } => {
                write!(f, "edge {src}->{dst} has a non-finite weight")
            }
            GraphError::LabelCountMismatch { labels, node_count } => {
                write!(f, "{labels} labels supplied for {node_count} nodes")
            }
            GraphError::DuplicateLabel(label) => write!(f, "duplicate node label {label:?}"),
            GraphError::TooManyNodes(n) => write!(f, "{n} nodes exceed the u32 id space"),
        }
    }
}

impl core::error::Error for GraphError {}

/// Counts of input rows dropped while building a graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    /// Repeated `(src, dst)` pairs; the first weight seen is kept.
    pub duplicates: usize,
    /// `src == dst` rows, which are skipped.
    pub self_loops: usize,
}

/// Collects edges and produces a [`DirectedGraph`].
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    node_count: usize,
    edges: Vec<(u32, u32, f64)>,
    labels: Option<Vec<String>>,
    self_loops: usize,
}

impl GraphBuilder {
    pub fn new(node_count: usize) -> Self {
        GraphBuilder {
            node_count,
            edges: Vec::new(),
            labels: None,
            self_loops: 0,
        }
    }

    /// Attaches external labels, one per dense id.
    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Grows the node range so that `node` is valid.
    pub fn ensure_node(&mut self, node: NodeId) {
        if node.index() >= self.node_count {
            self.node_count = node.index() + 1;
        }
    }

    /// Adds `src -> dst`. Self-loops are counted and dropped.
    pub fn add_edge(&mut self, src: NodeId, dst: NodeId, weight: f64) -> Result<(), GraphError> {
        for node in [src, dst] {
            if node.index() >= self.node_count {
                return Err(GraphError::InvalidNode {
                    node: node.0,
                    node_count: self.node_count,
                });
            }
        }
        if !weight.is_finite() {
            return Err(GraphError::NonFiniteWeight { src: src.0, dst: dst.0 });
        }
        if weight < 0.0 {
            return Err(GraphError::NegativeWeight {
                src: src.0,
                dst: dst.0,
                weight,
            });
        }
        if src == dst {
            self.self_loops += 1;
            return Ok(());
        }
        self.edges.push((src.0, dst.0, weight));
        Ok(())
    }

    pub fn build(self) -> Result<(DirectedGraph, BuildStats), GraphError> {
        let GraphBuilder {
            node_count,
            mut edges,
            labels,
            self_loops,
        } = self;
        if node_count > u32::MAX as usize {
            return Err(GraphError::TooManyNodes(node_count));
        }
        if let Some(labels) = &labels {
            if labels.len() != node_count {
                return Err(GraphError::LabelCountMismatch {
                    labels: labels.len(),
                    node_count,
                });
            }
            let mut seen = BTreeSet::new();
            for label in labels {
                if !seen.insert(label.as_str()) {
                    return Err(GraphError::DuplicateLabel(label.clone()));
                }
            }
        }

        // stable sort keeps insertion order among duplicates, so dedup keeps the first
        edges.sort_by_key(|&(s, d, _)| (s, d));
        let before = edges.len();
        edges.dedup_by_key(|e| (e.0, e.1));
        let duplicates = before - edges.len();

        let m = edges.len();
        let mut out_offsets = alloc::vec![0usize; node_count + 1];
        let mut in_offsets = alloc::vec![0usize; node_count + 1];
        for &(s, d, _) in &edges {
            out_offsets[s as usize + 1] += 1;
            in_offsets[d as usize + 1] += 1;
        }
        for i in 0..node_count {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }

        let mut out_sources = Vec::with_capacity(m);
        let mut out_targets = Vec::with_capacity(m);
        let mut out_weights = Vec::with_capacity(m);
        for &(s, d, w) in &edges {
            out_sources.push(NodeId(s));
            out_targets.push(NodeId(d));
            out_weights.push(w);
        }

        // edges are visited in (src, dst) order, so each in-list comes out sorted by src
        let mut cursor = in_offsets.clone();
        let mut in_sources = alloc::vec![NodeId(0); m];
        let mut in_edge = alloc::vec![0usize; m];
        for (e, &(s, d, _)) in edges.iter().enumerate() {
            let slot = cursor[d as usize];
            in_sources[slot] = NodeId(s);
            in_edge[slot] = e;
            cursor[d as usize] += 1;
        }

        Ok((
            DirectedGraph {
                out_offsets,
                out_sources,
                out_targets,
                out_weights,
                in_offsets,
                in_sources,
                in_edge,
                labels,
            },
            BuildStats { duplicates, self_loops },
        ))
    }
}

/// Directed weighted simple graph. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectedGraph {
    out_offsets: Vec<usize>,
    out_sources: Vec<NodeId>,
    out_targets: Vec<NodeId>,
    out_weights: Vec<f64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    in_edge: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl Default for DirectedGraph {
    fn default() -> Self {
        DirectedGraph::empty()
    }
}

impl DirectedGraph {
    pub fn empty() -> Self {
        DirectedGraph {
            out_offsets: alloc::vec![0],
            out_sources: Vec::new(),
            out_targets: Vec::new(),
            out_weights: Vec::new(),
            in_offsets: alloc::vec![0],
            in_sources: Vec::new(),
            in_edge: Vec::new(),
            labels: None,
        }
    }

    /// Convenience constructor from `(src, dst, weight)` triples over `0..n`.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<(Self, BuildStats), GraphError>
    where
        I: IntoIterator<Item = (u32, u32, f64)>,
    {
        let mut builder = GraphBuilder::new(node_count);
        for (s, d, w) in edges {
            builder.add_edge(NodeId(s), NodeId(d), w)?;
        }
        builder.build()
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.out_offsets.len() - 1
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_count() == 0
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.node_count() as u32).map(NodeId)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.index() < self.node_count()
    }

    pub fn check_node(&self, v: NodeId) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::InvalidNode {
                node: v.0,
                node_count: self.node_count(),
            })
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: NodeId) -> Option<&str> {
        self.labels.as_ref()?.get(v.index()).map(String::as_str)
    }

    /// Edge ids of the out-edges of `v`. Panics if `v` is out of range.
    #[inline]
    pub fn out_edge_ids(&self, v: NodeId) -> Range<usize> {
        self.out_offsets[v.index()]..self.out_offsets[v.index() + 1]
    }

    /// Targets of `v`'s out-edges, ascending. Panics if `v` is out of range.
    #[inline]
    pub fn out_targets(&self, v: NodeId) -> &[NodeId] {
        &self.out_targets[self.out_edge_ids(v)]
    }

    #[inline]
    pub fn out_weights(&self, v: NodeId) -> &[f64] {
        &self.out_weights[self.out_edge_ids(v)]
    }

    #[inline]
    fn in_range(&self, v: NodeId) -> Range<usize> {
        self.in_offsets[v.index()]..self.in_offsets[v.index() + 1]
    }

    /// Sources of `v`'s in-edges, ascending. Panics if `v` is out of range.
    #[inline]
    pub fn in_sources(&self, v: NodeId) -> &[NodeId] {
        &self.in_sources[self.in_range(v)]
    }

    /// Edge ids of `v`'s in-edges, aligned with [`Self::in_sources`].
    #[inline]
    pub fn in_edge_ids(&self, v: NodeId) -> &[usize] {
        &self.in_edge[self.in_range(v)]
    }

    #[inline]
    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out_edge_ids(v).len()
    }

    #[inline]
    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_range(v).len()
    }

    /// Out-edges of `v` in ascending target order.
    pub fn out_neighbors(&self, v: NodeId) -> Result<impl Iterator<Item = EdgeView> + '_, GraphError> {
        self.check_node(v)?;
        Ok(self.out_edge_ids(v).map(move |e| self.edge(e)))
    }

    /// In-edges of `v` in ascending source order.
    pub fn in_neighbors(&self, v: NodeId) -> Result<impl Iterator<Item = EdgeView> + '_, GraphError> {
        self.check_node(v)?;
        Ok(self.in_edge_ids(v).iter().map(move |&e| self.edge(e)))
    }

    /// The edge with id `e`. Panics if `e >= edge_count()`.
    #[inline]
    pub fn edge(&self, e: usize) -> EdgeView {
        EdgeView {
            src: self.out_sources[e],
            dst: self.out_targets[e],
            weight: self.out_weights[e],
        }
    }

    /// All edges in edge-id order, i.e. sorted by `(src, dst)`.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = EdgeView> + '_ {
        (0..self.edge_count()).map(move |e| self.edge(e))
    }

    /// Per-edge weights indexed by edge id.
    pub fn weights(&self) -> &[f64] {
        &self.out_weights
    }

    pub fn find_edge(&self, src: NodeId, dst: NodeId) -> Option<usize> {
        if !self.contains(src) {
            return None;
        }
        let range = self.out_edge_ids(src);
        self.out_targets[range.clone()]
            .binary_search(&dst)
            .ok()
            .map(|i| range.start + i)
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        self.find_edge(src, dst).is_some()
    }
}
