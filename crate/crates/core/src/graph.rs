//! Growing simple undirected graph with incrementally maintained node
//! attributes: degree, triangle count, degree histogram and the log of
//! node selections.
//!
//! Nodes and edges are only ever added. Every query the inner-model
//! components need (degree, triangles, counts of degree-1/degree-2 nodes,
//! recent selections) is answered from counters updated on each edge.

use std::collections::HashSet;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense node identifier, assigned consecutively from 0 in arrival order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// What changed when an edge was inserted.
///
/// Both endpoints gained one degree and `common.len()` triangles; each
/// common neighbour gained one triangle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeDelta {
    pub a: NodeId,
    pub b: NodeId,
    pub common: Vec<NodeId>,
}

#[inline]
fn edge_key(a: NodeId, b: NodeId) -> u64 {
    let (lo, hi) = if a.0 < b.0 { (a.0, b.0) } else { (b.0, a.0) };
    ((lo as u64) << 32) | hi as u64
}

#[derive(Debug, Clone, Default)]
pub struct EvolvingGraph {
    // insertion-ordered so that every iteration over neighbours is deterministic
    adjacency: Vec<Vec<NodeId>>,
    edges: HashSet<u64>,
    degree: Vec<u32>,
    triangles: Vec<u64>,
    // degree_hist[d] = number of nodes with degree d
    degree_hist: Vec<usize>,
    triangle_sum: u64,
    max_degree: u32,
    recency: Vec<NodeId>,
}

impl EvolvingGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// A graph holding the single root node 0, the starting point of every
    /// canonical event stream.
    pub fn with_root() -> Self {
        let mut g = Self::new();
        g.add_node();
        g
    }

    pub fn add_node(&mut self) -> NodeId {
        let id = NodeId::from(self.adjacency.len());
        self.adjacency.push(Vec::new());
        self.degree.push(0);
        self.triangles.push(0);
        self.bump_hist(0, 1);
        id
    }

    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> Result<EdgeDelta> {
        self.check_node(a)?;
        self.check_node(b)?;
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        if !self.edges.insert(edge_key(a, b)) {
            return Err(Error::DuplicateEdge(a, b));
        }

        let (small, large) =
            if self.adjacency[a.index()].len() <= self.adjacency[b.index()].len() { (a, b) } else { (b, a) };
        let common: Vec<NodeId> = self.adjacency[small.index()]
            .iter()
            .copied()
            .filter(|&x| self.edges.contains(&edge_key(x, large)))
            .collect();

        let k = common.len() as u64;
        self.triangles[a.index()] += k;
        self.triangles[b.index()] += k;
        for &x in &common {
            self.triangles[x.index()] += 1;
        }
        self.triangle_sum += 3 * k;

        for n in [a, b] {
            let d = self.degree[n.index()] as usize;
            self.bump_hist(d, -1);
            self.bump_hist(d + 1, 1);
            self.degree[n.index()] += 1;
            self.max_degree = self.max_degree.max(d as u32 + 1);
        }
        self.adjacency[a.index()].push(b);
        self.adjacency[b.index()].push(a);

        debug_assert_eq!(self.adjacency[a.index()].len(), self.degree[a.index()] as usize);
        Ok(EdgeDelta { a, b, common })
    }

    pub fn record_selection(&mut self, n: NodeId) -> Result<()> {
        self.check_node(n)?;
        self.recency.push(n);
        Ok(())
    }

    /// Distinct nodes among the last `window` selections, most recent first.
    pub fn recent_set(&self, window: usize) -> Vec<NodeId> {
        let start = self.recency.len().saturating_sub(window);
        let mut out: Vec<NodeId> = Vec::with_capacity(window.min(self.recency.len()));
        for &n in self.recency[start..].iter().rev() {
            if !out.contains(&n) {
                out.push(n);
            }
        }
        out
    }

    pub fn is_recent(&self, window: usize, n: NodeId) -> bool {
        let start = self.recency.len().saturating_sub(window);
        self.recency[start..].contains(&n)
    }

    /// True iff every node with at least one edge is reachable from node 0.
    /// Nodes still waiting for their first edge are ignored.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![NodeId(0)];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u.index()] {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    stack.push(v);
                }
            }
        }
        (0..n).all(|i| seen[i] || self.degree[i] == 0)
    }

    /// Nodes adjacent to every other node; these cannot start a new
    /// internal edge.
    pub fn saturated_nodes(&self) -> Vec<NodeId> {
        let n = self.node_count();
        if n == 0 || (self.max_degree as usize) < n - 1 {
            return Vec::new();
        }
        (0..n).filter(|&i| self.degree[i] as usize == n - 1).map(NodeId::from).collect()
    }

    pub fn is_complete(&self) -> bool {
        let n = self.node_count();
        self.edge_count() == n * n.saturating_sub(1) / 2
    }

    #[inline]
    pub fn contains(&self, n: NodeId) -> bool {
        n.index() < self.adjacency.len()
    }

    pub fn check_node(&self, n: NodeId) -> Result<()> {
        if self.contains(n) {
            Ok(())
        } else {
            Err(Error::UnknownNode(n))
        }
    }

    #[inline]
    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edges.contains(&edge_key(a, b))
    }

    #[inline]
    pub fn neighbors(&self, n: NodeId) -> &[NodeId] {
        &self.adjacency[n.index()]
    }

    #[inline]
    pub fn degree(&self, n: NodeId) -> usize {
        self.degree[n.index()] as usize
    }

    #[inline]
    pub fn triangles(&self, n: NodeId) -> u64 {
        self.triangles[n.index()]
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of nodes with degree exactly `d`.
    #[inline]
    pub fn degree_count(&self, d: usize) -> usize {
        self.degree_hist.get(d).copied().unwrap_or(0)
    }

    /// `(degree, node count)` for every degree that occurs.
    pub fn degree_histogram(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.degree_hist.iter().copied().enumerate().filter(|&(_, c)| c > 0)
    }

    /// Sum of per-node triangle counts (three times the number of triangles).
    #[inline]
    pub fn triangle_sum(&self) -> u64 {
        self.triangle_sum
    }

    #[inline]
    pub fn max_degree(&self) -> usize {
        self.max_degree as usize
    }

    pub fn recency_log(&self) -> &[NodeId] {
        &self.recency
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId::from)
    }

    /// Edges as `(lo, hi)` pairs in a canonical sorted order.
    pub fn edge_list(&self) -> Vec<(NodeId, NodeId)> {
        let mut out: Vec<(NodeId, NodeId)> =
            self.edges.iter().map(|&k| (NodeId((k >> 32) as u32), NodeId(k as u32))).collect();
        out.sort_unstable();
        out
    }

    /// Hex digest of the node count, sorted edge list and selection log.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.node_count() as u64).to_le_bytes());
        for (a, b) in self.edge_list() {
            h.update(a.0.to_le_bytes());
            h.update(b.0.to_le_bytes());
        }
        for n in &self.recency {
            h.update(n.0.to_le_bytes());
        }
        hex::encode(&h.finalize()[..16])
    }

    fn bump_hist(&mut self, d: usize, by: isize) {
        if self.degree_hist.len() <= d {
            self.degree_hist.resize(d + 1, 0);
        }
        self.degree_hist[d] = (self.degree_hist[d] as isize + by) as usize;
    }
}
