//! Per-rank graph storage and the semiring kernels the distributed searches
//! are built from.
//!
//! A local block is always stored twice by the engine: once keyed by frontier
//! source (used by the top-down SpMSV) and once keyed by discovered
//! destination (used by the bottom-up probe loop). Both copies use the same
//! [`Datastructure`].

mod csr;
mod dcsc;
mod edges;
mod spa;
mod spmsv;
mod vector;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csr::CsrMatrix;
pub use dcsc::DcscMatrix;
pub use edges::{EdgeList, VertexId};
pub use spa::Spa;
pub use spmsv::spmsv;
pub use vector::{DenseBitmap, SparseVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge ({src}, {dst}) has an endpoint outside [0, {n})")]
    VertexOutOfRange { src: u64, dst: u64, n: u64 },
    #[error("mapped {axis} index {index} is outside extent {extent}")]
    IndexOutOfRange {
        axis: &'static str,
        index: u64,
        extent: u64,
    },
    #[error("sparse vector entries must be strictly increasing and below {len}; offending index {index}")]
    UnsortedOrOutOfRange { index: u64, len: u64 },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: u64, actual: u64 },
}

/// Read access to a compressed sparse matrix along its compressed axis.
///
/// For a CSR matrix the key is a row and the adjacency lists column ids; for
/// DCSC the key is a column and the adjacency lists row ids.
pub trait Adjacency {
    /// Extent of the compressed (keyed) axis.
    fn key_extent(&self) -> u64;
    /// Extent of the axis the adjacency entries index into.
    fn value_extent(&self) -> u64;
    fn nnz(&self) -> u64;
    /// Sorted adjacency of `key`; empty when the line holds no nonzeros.
    fn adjacency(&self, key: u64) -> &[u64];
    /// Words spent on index arrays (pointers plus ids).
    fn index_words(&self) -> u64;
}

/// Local storage format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datastructure {
    Csr,
    Dcsc,
}

impl fmt::Display for Datastructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Datastructure::Csr => "csr",
            Datastructure::Dcsc => "dcsc",
        })
    }
}

impl FromStr for Datastructure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csr" => Ok(Datastructure::Csr),
            "dcsc" => Ok(Datastructure::Dcsc),
            other => Err(format!("unknown datastructure `{other}` (expected csr|dcsc)")),
        }
    }
}

/// A local matrix in either format, keyed along its compressed axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalMatrix {
    Csr(CsrMatrix),
    Dcsc(DcscMatrix),
}

impl LocalMatrix {
    /// Builds a matrix keyed by the first component of each pair.
    ///
    /// `pairs` holds `(key, value)` local offsets; for CSR the key becomes the
    /// row, for DCSC the key becomes the column.
    pub fn keyed(
        ds: Datastructure,
        pairs: &[(u64, u64)],
        key_extent: u64,
        value_extent: u64,
    ) -> Result<Self, GraphError> {
        let id = |x: u64| x;
        Ok(match ds {
            Datastructure::Csr => LocalMatrix::Csr(CsrMatrix::from_edges(pairs, key_extent, value_extent, id, id)?),
            Datastructure::Dcsc => {
                let flipped: Vec<(u64, u64)> = pairs.iter().map(|&(k, v)| (v, k)).collect();
                LocalMatrix::Dcsc(DcscMatrix::from_edges(&flipped, value_extent, key_extent, id, id)?)
            }
        })
    }

    pub fn datastructure(&self) -> Datastructure {
        match self {
            LocalMatrix::Csr(_) => Datastructure::Csr,
            LocalMatrix::Dcsc(_) => Datastructure::Dcsc,
        }
    }

    /// Number of keys with a nonempty adjacency.
    pub fn nonempty_keys(&self) -> u64 {
        match self {
            LocalMatrix::Csr(m) => m.nonempty_rows(),
            LocalMatrix::Dcsc(m) => m.nzc(),
        }
    }
}

impl Adjacency for LocalMatrix {
    fn key_extent(&self) -> u64 {
        match self {
            LocalMatrix::Csr(m) => m.key_extent(),
            LocalMatrix::Dcsc(m) => m.key_extent(),
        }
    }

    fn value_extent(&self) -> u64 {
        match self {
            LocalMatrix::Csr(m) => m.value_extent(),
            LocalMatrix::Dcsc(m) => m.value_extent(),
        }
    }

    fn nnz(&self) -> u64 {
        match self {
            LocalMatrix::Csr(m) => m.nnz(),
            LocalMatrix::Dcsc(m) => m.nnz(),
        }
    }

    #[inline]
    fn adjacency(&self, key: u64) -> &[u64] {
        match self {
            LocalMatrix::Csr(m) => m.adjacency(key),
            LocalMatrix::Dcsc(m) => m.adjacency(key),
        }
    }

    fn index_words(&self) -> u64 {
        match self {
            LocalMatrix::Csr(m) => m.index_words(),
            LocalMatrix::Dcsc(m) => m.index_words(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_formats_agree() {
        let pairs = [(0, 2), (3, 1), (0, 1), (2, 0)];
        let csr = LocalMatrix::keyed(Datastructure::Csr, &pairs, 4, 3).unwrap();
        let dcsc = LocalMatrix::keyed(Datastructure::Dcsc, &pairs, 4, 3).unwrap();
        for k in 0..4 {
            assert_eq!(csr.adjacency(k), dcsc.adjacency(k), "key {k}");
        }
        assert_eq!(csr.nonempty_keys(), 3);
        assert_eq!(dcsc.nonempty_keys(), 3);
        assert_eq!(csr.key_extent(), dcsc.key_extent());
        assert_eq!(csr.value_extent(), dcsc.value_extent());
    }

    #[test]
    fn datastructure_parses() {
        assert_eq!("csr".parse::<Datastructure>().unwrap(), Datastructure::Csr);
        assert_eq!("dcsc".parse::<Datastructure>().unwrap(), Datastructure::Dcsc);
        assert!("coo".parse::<Datastructure>().is_err());
        assert_eq!(Datastructure::Dcsc.to_string(), "dcsc");
    }
}
