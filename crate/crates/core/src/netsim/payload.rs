use std::hash::Hash;
use std::ops::Range;

use crate::graph::{DenseBitmap, SparseVector};

/// Anything that can travel through the simulated network.
///
/// Sparse payloads cost two words per `(index, value)` entry plus one size
/// word per message. Bitmaps cost `ceil(bits / 64)` words and need no size
/// word because both sides know the segment length.
pub trait Payload: Clone + Hash + Send + Sync {
    fn payload_words(&self) -> u64;
    fn size_words(&self) -> u64;
    /// Concatenation in the given order; `parts` is never empty.
    fn concat(parts: Vec<Self>) -> Self;
}

/// A payload that covers a contiguous range of global vertex ids and can be
/// cut along it.
pub trait SegmentPayload: Payload {
    /// Piece covering global `range`; `self` covers ids starting at `start`.
    fn restrict(&self, start: u64, range: Range<u64>) -> Self;
    /// A payload over `range` carrying nothing.
    fn empty_over(range: Range<u64>, n: u64) -> Self;
}

impl Payload for SparseVector {
    fn payload_words(&self) -> u64 {
        2 * self.nnz() as u64
    }

    fn size_words(&self) -> u64 {
        1
    }

    fn concat(parts: Vec<Self>) -> Self {
        let len = parts.first().map_or(0, |p| p.len());
        SparseVector::concat(&parts, len)
    }
}

/// Sparse payloads index by global vertex id.
impl SegmentPayload for SparseVector {
    fn restrict(&self, _start: u64, range: Range<u64>) -> Self {
        SparseVector::restrict(self, range)
    }

    fn empty_over(_range: Range<u64>, n: u64) -> Self {
        SparseVector::empty(n)
    }
}

impl Payload for DenseBitmap {
    fn payload_words(&self) -> u64 {
        self.word_len()
    }

    fn size_words(&self) -> u64 {
        0
    }

    fn concat(parts: Vec<Self>) -> Self {
        DenseBitmap::concat(&parts)
    }
}

/// Bitmaps index relative to the start of the range they cover.
impl SegmentPayload for DenseBitmap {
    fn restrict(&self, start: u64, range: Range<u64>) -> Self {
        self.slice(range.start - start..range.end - start)
    }

    fn empty_over(range: Range<u64>, _n: u64) -> Self {
        DenseBitmap::new(range.end - range.start)
    }
}
