use serde::{Serialize, Serializer};

/// Marker for a vertex without a parent. Serialized as `-1`.
pub const UNVISITED: u64 = u64::MAX;

/// BFS tree as a parent array.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParentVector {
    source: u64,
    parent: Vec<u64>,
}

impl ParentVector {
    /// Only the source is parented (to itself).
    pub fn new(n: u64, source: u64) -> Self {
        assert!(source < n, "source {source} outside [0, {n})");
        let mut parent = vec![UNVISITED; n as usize];
        parent[source as usize] = source;
        ParentVector { source, parent }
    }

    /// Wraps a raw array; nothing is checked, see [`crate::bfs::validate_tree`].
    pub fn from_raw(source: u64, parent: Vec<u64>) -> Self {
        ParentVector { source, parent }
    }

    pub fn source(&self) -> u64 {
        self.source
    }

    pub fn len(&self) -> u64 {
        self.parent.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn get(&self, v: u64) -> Option<u64> {
        match self.parent[v as usize] {
            UNVISITED => None,
            p => Some(p),
        }
    }

    pub fn set(&mut self, v: u64, p: u64) {
        self.parent[v as usize] = p;
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.parent
    }

    pub fn reached(&self) -> u64 {
        self.parent.iter().filter(|&&p| p != UNVISITED).count() as u64
    }

    /// Parent ids with `-1` for unreached vertices.
    pub fn to_signed(&self) -> Vec<i64> {
        self.parent
            .iter()
            .map(|&p| if p == UNVISITED { -1 } else { p as i64 })
            .collect()
    }
}

impl Serialize for ParentVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_signed().serialize(s)
    }
}
