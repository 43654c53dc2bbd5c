//! 2D checkerboard decomposition over a `p_r x p_c` process grid.
//!
//! Conventions used everywhere in the crate:
//!
//! * the vertex range `[0, n)` is cut into `p_r` contiguous *row blocks* and,
//!   independently, into `p_c` contiguous *column blocks*;
//! * rank `(i, j)` stores every edge `(src, dst)` with `dst` in row block `i`
//!   and `src` in column block `j`, so a stored block's columns are frontier
//!   sources and its rows are discovered destinations;
//! * rank `(i, j)` owns *segment* `j` of row block `i` (row block `i` cut into
//!   `p_c` pieces), and segments taken in rank order partition `[0, n)`;
//! * before an expand, vectors are moved to *gather segments*: rank `(i, j)`
//!   holds piece `i` of column block `j` cut into `p_r` pieces, so an
//!   allgather down grid column `j` reassembles column block `j`.
//!
//! A range of length `L` cut into `k` pieces gives piece `b` the length
//! `ceil(L/k)` when `b < L mod k` and `floor(L/k)` otherwise.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("grid extents must be positive, got {p_r}x{p_c}")]
    EmptyGrid { p_r: usize, p_c: usize },
    #[error("vertex {id} is outside {what} {range:?}")]
    OutOfRange {
        id: u64,
        what: &'static str,
        range: Range<u64>,
    },
    #[error("rank {0} is outside the grid")]
    NoSuchRank(Coords),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coords {
    pub row: usize,
    pub col: usize,
}

impl Coords {
    pub fn new(row: usize, col: usize) -> Self {
        Coords { row, col }
    }
}

impl fmt::Display for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcGrid {
    p_r: usize,
    p_c: usize,
}

impl ProcGrid {
    pub fn new(p_r: usize, p_c: usize) -> Result<Self, GridError> {
        if p_r == 0 || p_c == 0 {
            return Err(GridError::EmptyGrid { p_r, p_c });
        }
        Ok(ProcGrid { p_r, p_c })
    }

    pub fn p_r(&self) -> usize {
        self.p_r
    }

    pub fn p_c(&self) -> usize {
        self.p_c
    }

    pub fn size(&self) -> usize {
        self.p_r * self.p_c
    }

    /// Row-major linear rank id.
    pub fn rank(&self, c: Coords) -> usize {
        debug_assert!(self.contains(c));
        c.row * self.p_c + c.col
    }

    pub fn coords(&self, rank: usize) -> Coords {
        Coords::new(rank / self.p_c, rank % self.p_c)
    }

    pub fn contains(&self, c: Coords) -> bool {
        c.row < self.p_r && c.col < self.p_c
    }

    pub fn all(&self) -> impl Iterator<Item = Coords> + '_ {
        (0..self.size()).map(|r| self.coords(r))
    }

    /// Processor row `P(i, :)`.
    pub fn row_group(&self, i: usize) -> Group {
        Group {
            members: (0..self.p_c).map(|j| Coords::new(i, j)).collect(),
        }
    }

    /// Processor column `P(:, j)`.
    pub fn col_group(&self, j: usize) -> Group {
        Group {
            members: (0..self.p_r).map(|i| Coords::new(i, j)).collect(),
        }
    }

    pub fn world(&self) -> Group {
        Group {
            members: self.all().collect(),
        }
    }
}

impl fmt::Display for ProcGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.p_r, self.p_c)
    }
}

/// An ordered set of ranks taking part in a collective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    members: Vec<Coords>,
}

impl Group {
    pub fn new(members: Vec<Coords>) -> Self {
        Group { members }
    }

    pub fn members(&self) -> &[Coords] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn position(&self, c: Coords) -> Option<usize> {
        self.members.iter().position(|&m| m == c)
    }
}

/// Boundaries of `k` contiguous pieces of `[start, start + len)`.
pub fn split_bounds(start: u64, len: u64, k: usize) -> Vec<u64> {
    let k64 = k as u64;
    let (q, r) = (len / k64, len % k64);
    let mut bounds = Vec::with_capacity(k + 1);
    let mut at = start;
    bounds.push(at);
    for b in 0..k64 {
        at += q + u64::from(b < r);
        bounds.push(at);
    }
    bounds
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Row block `i` of rank `(i, j)`: destinations of its stored edges.
    Row,
    /// Column block `j` of rank `(i, j)`: sources of its stored edges.
    Column,
    /// The rank's owned vector segment.
    Segment,
    /// The rank's piece of its column block after a vector transpose.
    GatherSegment,
}

/// Which rank owns which block and which vector segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexOwnership {
    n: u64,
    grid: ProcGrid,
    row_bounds: Vec<u64>,
    col_bounds: Vec<u64>,
    /// `p + 1` boundaries, segments in row-major rank order
    seg_bounds: Vec<u64>,
    /// gather segment boundaries, indexed by linear rank
    gather: Vec<Range<u64>>,
}

impl VertexOwnership {
    pub fn new(n: u64, grid: ProcGrid) -> Self {
        let row_bounds = split_bounds(0, n, grid.p_r);
        let col_bounds = split_bounds(0, n, grid.p_c);
        let mut seg_bounds = vec![0];
        for i in 0..grid.p_r {
            let b = split_bounds(row_bounds[i], row_bounds[i + 1] - row_bounds[i], grid.p_c);
            seg_bounds.extend_from_slice(&b[1..]);
        }
        let mut gather = vec![0..0; grid.size()];
        for j in 0..grid.p_c {
            let b = split_bounds(col_bounds[j], col_bounds[j + 1] - col_bounds[j], grid.p_r);
            for i in 0..grid.p_r {
                gather[grid.rank(Coords::new(i, j))] = b[i]..b[i + 1];
            }
        }
        VertexOwnership {
            n,
            grid,
            row_bounds,
            col_bounds,
            seg_bounds,
            gather,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn grid(&self) -> ProcGrid {
        self.grid
    }

    pub fn row_block(&self, i: usize) -> Range<u64> {
        self.row_bounds[i]..self.row_bounds[i + 1]
    }

    pub fn col_block(&self, j: usize) -> Range<u64> {
        self.col_bounds[j]..self.col_bounds[j + 1]
    }

    pub fn segment(&self, c: Coords) -> Range<u64> {
        let r = self.grid.rank(c);
        self.seg_bounds[r]..self.seg_bounds[r + 1]
    }

    pub fn gather_segment(&self, c: Coords) -> Range<u64> {
        self.gather[self.grid.rank(c)].clone()
    }

    pub fn range(&self, axis: Axis, c: Coords) -> Range<u64> {
        match axis {
            Axis::Row => self.row_block(c.row),
            Axis::Column => self.col_block(c.col),
            Axis::Segment => self.segment(c),
            Axis::GatherSegment => self.gather_segment(c),
        }
    }

    fn locate(bounds: &[u64], id: u64) -> usize {
        bounds.partition_point(|&b| b <= id) - 1
    }

    pub fn row_block_of(&self, id: u64) -> usize {
        Self::locate(&self.row_bounds, id)
    }

    pub fn col_block_of(&self, id: u64) -> usize {
        Self::locate(&self.col_bounds, id)
    }

    /// The rank that stores edge `(src, dst)`.
    pub fn block_of_edge(&self, src: u64, dst: u64) -> Result<Coords, GridError> {
        for id in [src, dst] {
            if id >= self.n {
                return Err(GridError::OutOfRange {
                    id,
                    what: "vertex range",
                    range: 0..self.n,
                });
            }
        }
        Ok(Coords::new(self.row_block_of(dst), self.col_block_of(src)))
    }

    /// The unique rank whose segment contains `id`.
    pub fn segment_owner(&self, id: u64) -> Result<Coords, GridError> {
        if id >= self.n {
            return Err(GridError::OutOfRange {
                id,
                what: "vertex range",
                range: 0..self.n,
            });
        }
        Ok(self.grid.coords(Self::locate(&self.seg_bounds, id)))
    }

    /// Offset of `id` within the rank's range along `axis`.
    pub fn local_index(&self, id: u64, axis: Axis, c: Coords) -> Result<u64, GridError> {
        if !self.grid.contains(c) {
            return Err(GridError::NoSuchRank(c));
        }
        let range = self.range(axis, c);
        if !range.contains(&id) {
            return Err(GridError::OutOfRange {
                id,
                what: "rank range",
                range,
            });
        }
        Ok(id - range.start)
    }

    /// Inverse of [`local_index`](Self::local_index).
    pub fn global_index(&self, offset: u64, axis: Axis, c: Coords) -> Result<u64, GridError> {
        if !self.grid.contains(c) {
            return Err(GridError::NoSuchRank(c));
        }
        let range = self.range(axis, c);
        let id = range.start + offset;
        if !range.contains(&id) {
            return Err(GridError::OutOfRange {
                id,
                what: "rank range",
                range,
            });
        }
        Ok(id)
    }

    /// Lengths of all segments in rank order.
    pub fn segment_lengths(&self) -> Vec<u64> {
        self.seg_bounds.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn gather_segment_lengths(&self) -> Vec<u64> {
        self.gather.iter().map(|r| r.end - r.start).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn own(n: u64, p_r: usize, p_c: usize) -> VertexOwnership {
        VertexOwnership::new(n, ProcGrid::new(p_r, p_c).unwrap())
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(ProcGrid::new(0, 3).is_err());
        assert!(ProcGrid::new(2, 0).is_err());
    }

    #[test]
    fn edge_blocks() {
        let o = own(8, 2, 2);
        assert_eq!(o.block_of_edge(0, 7).unwrap(), Coords::new(1, 0));
        let o = own(8, 1, 1);
        for s in 0..8 {
            for d in 0..8 {
                assert_eq!(o.block_of_edge(s, d).unwrap(), Coords::new(0, 0));
            }
        }
        assert!(o.block_of_edge(8, 0).is_err());
    }

    #[test]
    fn random_edges_partition_into_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (p_r, p_c) in [(1, 1), (2, 2), (3, 2), (1, 4), (4, 1), (3, 5)] {
            let n = rng.random_range(1..100u64);
            let o = own(n, p_r, p_c);
            let edges: Vec<(u64, u64)> = (0..500)
                .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
                .collect();
            let mut counts = vec![0usize; p_r * p_c];
            for &(s, d) in &edges {
                let c = o.block_of_edge(s, d).unwrap();
                // exactly one block: check membership of every block
                let hits = o
                    .grid()
                    .all()
                    .filter(|&b| o.row_block(b.row).contains(&d) && o.col_block(b.col).contains(&s))
                    .count();
                assert_eq!(hits, 1);
                counts[o.grid().rank(c)] += 1;
            }
            assert_eq!(counts.iter().sum::<usize>(), edges.len());
        }
    }

    #[test]
    fn segment_owner_examples() {
        let o = own(16, 2, 2);
        assert_eq!(o.segment_owner(0).unwrap(), Coords::new(0, 0));
        assert_eq!(o.segment_owner(4).unwrap(), Coords::new(0, 1));
        assert_eq!(o.segment_owner(8).unwrap(), Coords::new(1, 0));
        assert!(o.segment_owner(16).is_err());

        let o = own(5, 2, 2);
        assert_eq!(o.segment_lengths(), vec![2, 1, 1, 1]);
    }

    #[test]
    fn segments_cover_every_id_once() {
        for (n, p_r, p_c) in [(64, 2, 4), (63, 4, 4), (7, 4, 2), (3, 4, 4), (0, 2, 2)] {
            let o = own(n, p_r, p_c);
            for id in 0..n {
                let owners: Vec<_> = o.grid().all().filter(|&c| o.segment(c).contains(&id)).collect();
                assert_eq!(owners, vec![o.segment_owner(id).unwrap()]);
                // segment lies inside the owner's row block
                let c = owners[0];
                assert!(o.row_block(c.row).contains(&id));
                let g: Vec<_> = o.grid().all().filter(|&c| o.gather_segment(c).contains(&id)).collect();
                assert_eq!(g.len(), 1);
                assert!(o.col_block(g[0].col).contains(&id));
            }
            assert_eq!(o.segment_lengths().iter().sum::<u64>(), n);
        }
    }

    #[test]
    fn square_grid_gather_segment_is_transposed_segment() {
        for (n, p) in [(64, 4), (61, 3), (5, 2)] {
            let o = own(n, p, p);
            for c in o.grid().all() {
                assert_eq!(o.gather_segment(c), o.segment(Coords::new(c.col, c.row)));
            }
        }
    }

    #[test]
    fn local_index_roundtrip() {
        let o = own(1, 1, 1);
        assert_eq!(o.local_index(0, Axis::Row, Coords::new(0, 0)).unwrap(), 0);
        let o = own(64, 4, 2);
        for c in o.grid().all() {
            for axis in [Axis::Row, Axis::Column, Axis::Segment, Axis::GatherSegment] {
                let range = o.range(axis, c);
                for id in 0..64 {
                    match o.local_index(id, axis, c) {
                        Ok(off) => {
                            assert!(range.contains(&id));
                            assert_eq!(o.global_index(off, axis, c).unwrap(), id);
                        }
                        Err(_) => assert!(!range.contains(&id)),
                    }
                }
                assert_eq!(o.local_index(range.start, axis, c).unwrap(), 0);
            }
        }
        assert!(o.local_index(0, Axis::Row, Coords::new(9, 0)).is_err());
    }

    #[test]
    fn one_dimensional_grids_degenerate() {
        // 1 x p_c: single row block, segments are the column cuts of [0, n)
        let o = own(40, 1, 4);
        assert_eq!(o.row_block(0), 0..40);
        for j in 0..4 {
            assert_eq!(o.segment(Coords::new(0, j)), o.col_block(j));
        }
        // p_r x 1: segments are the row blocks
        let o = own(40, 4, 1);
        for i in 0..4 {
            assert_eq!(o.segment(Coords::new(i, 0)), o.row_block(i));
            assert_eq!(o.col_block(0), 0..40);
        }
    }
}
