use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::GraphError;

/// Sorted `(index, value)` pairs over a logical length.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u64, u64)>,
    len: u64,
}

impl SparseVector {
    pub fn new(entries: Vec<(u64, u64)>, len: u64) -> Result<Self, GraphError> {
        let mut prev: Option<u64> = None;
        for &(i, _) in &entries {
            if i >= len || prev.is_some_and(|p| p >= i) {
                return Err(GraphError::UnsortedOrOutOfRange { index: i, len });
            }
            prev = Some(i);
        }
        Ok(SparseVector { entries, len })
    }

    pub(crate) fn from_sorted(entries: Vec<(u64, u64)>, len: u64) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.last().is_none_or(|e| e.0 < len));
        SparseVector { entries, len }
    }

    pub fn empty(len: u64) -> Self {
        SparseVector {
            entries: Vec::new(),
            len,
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(u64, u64)> {
        self.entries
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn get(&self, index: u64) -> Option<u64> {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .ok()
            .map(|k| self.entries[k].1)
    }

    /// Entries whose index falls in `range`, keeping the logical length.
    pub fn restrict(&self, range: Range<u64>) -> SparseVector {
        let lo = self.entries.partition_point(|e| e.0 < range.start);
        let hi = self.entries.partition_point(|e| e.0 < range.end);
        SparseVector {
            entries: self.entries[lo..hi].to_vec(),
            len: self.len,
        }
    }

    /// Concatenates vectors whose index ranges are ascending and disjoint.
    pub fn concat(parts: &[SparseVector], len: u64) -> SparseVector {
        let mut entries = Vec::with_capacity(parts.iter().map(|p| p.nnz()).sum());
        for p in parts {
            entries.extend_from_slice(&p.entries);
        }
        SparseVector::from_sorted(entries, len)
    }
}

/// Packed bitmap over `len` positions; bits past `len` stay zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DenseBitmap {
    words: Vec<u64>,
    len: u64,
}

impl DenseBitmap {
    pub fn new(len: u64) -> Self {
        DenseBitmap {
            words: vec![0; len.div_ceil(64) as usize],
            len,
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of 64-bit words backing the bitmap.
    pub fn word_len(&self) -> u64 {
        self.words.len() as u64
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: u64) -> bool {
        debug_assert!(i < self.len);
        self.words[(i >> 6) as usize] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: u64) {
        assert!(i < self.len, "bit {i} outside bitmap of length {}", self.len);
        self.words[(i >> 6) as usize] |= 1 << (i & 63);
    }

    pub(crate) fn clear_word_containing(&mut self, i: u64) {
        self.words[(i >> 6) as usize] = 0;
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let base = (k as u64) << 6;
            BitIter(w).map(move |b| base + b)
        })
    }

    /// Copy of bits `[range.start, range.end)` as a new bitmap.
    pub fn slice(&self, range: Range<u64>) -> DenseBitmap {
        assert!(range.end <= self.len && range.start <= range.end);
        let mut out = DenseBitmap::new(range.end - range.start);
        if range.start.is_multiple_of(64) {
            let first = (range.start / 64) as usize;
            let n = out.words.len();
            out.words.copy_from_slice(&self.words[first..first + n]);
            out.mask_tail();
        } else {
            for i in range.clone() {
                if self.get(i) {
                    out.set(i - range.start);
                }
            }
        }
        out
    }

    /// Appends bitmaps in order.
    pub fn concat(parts: &[DenseBitmap]) -> DenseBitmap {
        let total: u64 = parts.iter().map(|p| p.len).sum();
        let mut out = DenseBitmap::new(total);
        let mut offset = 0u64;
        for p in parts {
            if offset.is_multiple_of(64) {
                let first = (offset / 64) as usize;
                out.words[first..first + p.words.len()].copy_from_slice(&p.words);
            } else {
                for i in p.iter_ones() {
                    out.set(offset + i);
                }
            }
            offset += p.len;
        }
        out
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as u64;
        self.0 &= self.0 - 1;
        Some(b)
    }
}
