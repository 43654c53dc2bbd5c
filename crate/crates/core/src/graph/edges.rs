use serde::{Deserialize, Serialize};

use super::GraphError;

/// Vertex identifiers are 64-bit throughout.
pub type VertexId = u64;

/// A list of `(src, dst)` pairs over the vertex range `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeList {
    n: u64,
    edges: Vec<(VertexId, VertexId)>,
    directed: bool,
}

impl EdgeList {
    /// Checks every endpoint against `n`.
    pub fn new(n: u64, edges: Vec<(VertexId, VertexId)>, directed: bool) -> Result<Self, GraphError> {
        if let Some(&(src, dst)) = edges.iter().find(|&&(s, d)| s >= n || d >= n) {
            return Err(GraphError::VertexOutOfRange { src, dst, n });
        }
        Ok(EdgeList { n, edges, directed })
    }

    pub(crate) fn from_parts_unchecked(n: u64, edges: Vec<(VertexId, VertexId)>, directed: bool) -> Self {
        debug_assert!(edges.iter().all(|&(s, d)| s < n && d < n));
        EdgeList { n, edges, directed }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn into_edges(self) -> Vec<(VertexId, VertexId)> {
        self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Out-degree of every vertex (for a symmetrized list this is the degree).
    pub fn out_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n as usize];
        for &(s, _) in &self.edges {
            deg[s as usize] += 1;
        }
        deg
    }

    /// `true` for every vertex that touches at least one edge.
    pub fn non_isolated(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n as usize];
        for &(s, d) in &self.edges {
            seen[s as usize] = true;
            seen[d as usize] = true;
        }
        seen
    }

    /// Edge count used for TEPS: stored pairs for a directed list, half of
    /// them for an undirected (symmetrized) one.
    pub fn input_edge_count(&self) -> u64 {
        if self.directed {
            self.edges.len() as u64
        } else {
            // symmetrized lists have no self-loops, so every edge appears twice
            self.edges.len() as u64 / 2
        }
    }
}
