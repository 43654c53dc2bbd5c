use super::{Adjacency, GraphError};

/// Compressed sparse rows: `row_ptr` has `rows + 1` offsets into `col_ids`,
/// and each row's column ids are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrMatrix {
    row_ptr: Vec<u64>,
    col_ids: Vec<u64>,
    rows: u64,
    cols: u64,
}

impl CsrMatrix {
    /// Stores each edge `(a, b)` at `(row_map(a), col_map(b))`.
    ///
    /// Duplicate pairs are kept; canonicalize the edge list first if that is
    /// not wanted.
    pub fn from_edges<R, C>(
        edges: &[(u64, u64)],
        rows: u64,
        cols: u64,
        row_map: R,
        col_map: C,
    ) -> Result<Self, GraphError>
    where
        R: Fn(u64) -> u64,
        C: Fn(u64) -> u64,
    {
        let mut mapped = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            let (r, c) = (row_map(a), col_map(b));
            if r >= rows {
                return Err(GraphError::IndexOutOfRange {
                    axis: "row",
                    index: r,
                    extent: rows,
                });
            }
            if c >= cols {
                return Err(GraphError::IndexOutOfRange {
                    axis: "column",
                    index: c,
                    extent: cols,
                });
            }
            mapped.push((r, c));
        }

        // counting sort by row, then sort each row's columns
        let mut row_ptr = vec![0u64; rows as usize + 1];
        for &(r, _) in &mapped {
            row_ptr[r as usize + 1] += 1;
        }
        for i in 0..rows as usize {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut fill = row_ptr.clone();
        let mut col_ids = vec![0u64; mapped.len()];
        for &(r, c) in &mapped {
            let slot = &mut fill[r as usize];
            col_ids[*slot as usize] = c;
            *slot += 1;
        }
        for w in row_ptr.windows(2) {
            col_ids[w[0] as usize..w[1] as usize].sort_unstable();
        }

        Ok(CsrMatrix {
            row_ptr,
            col_ids,
            rows,
            cols,
        })
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn cols(&self) -> u64 {
        self.cols
    }

    pub fn row_ptr(&self) -> &[u64] {
        &self.row_ptr
    }

    pub fn col_ids(&self) -> &[u64] {
        &self.col_ids
    }

    #[inline]
    pub fn row(&self, r: u64) -> &[u64] {
        let r = r as usize;
        &self.col_ids[self.row_ptr[r] as usize..self.row_ptr[r + 1] as usize]
    }

    pub fn contains(&self, r: u64, c: u64) -> bool {
        r < self.rows && self.row(r).binary_search(&c).is_ok()
    }

    pub fn nonempty_rows(&self) -> u64 {
        self.row_ptr.windows(2).filter(|w| w[1] > w[0]).count() as u64
    }

    /// All stored `(row, col)` pairs in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).iter().map(move |&c| (r, c)))
    }
}

impl Adjacency for CsrMatrix {
    fn key_extent(&self) -> u64 {
        self.rows
    }

    fn value_extent(&self) -> u64 {
        self.cols
    }

    fn nnz(&self) -> u64 {
        self.col_ids.len() as u64
    }

    #[inline]
    fn adjacency(&self, key: u64) -> &[u64] {
        if key >= self.rows {
            return &[];
        }
        self.row(key)
    }

    fn index_words(&self) -> u64 {
        self.col_ids.len() as u64 + self.rows + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn id(x: u64) -> u64 {
        x
    }

    #[test]
    fn three_edge_example() {
        let m = CsrMatrix::from_edges(&[(0, 1), (0, 2), (2, 0)], 3, 3, id, id).unwrap();
        assert_eq!(m.row_ptr(), &[0, 2, 2, 3]);
        assert_eq!(m.col_ids(), &[1, 2, 0]);
        assert_eq!(m.index_words(), 3 + 3 + 1);
    }

    #[test]
    fn empty_four_by_four() {
        let m = CsrMatrix::from_edges(&[], 4, 4, id, id).unwrap();
        assert_eq!(m.row_ptr(), &[0, 0, 0, 0, 0]);
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn out_of_range_mapping_fails() {
        let err = CsrMatrix::from_edges(&[(0, 5)], 2, 2, id, |c| c - 1).unwrap_err();
        assert!(matches!(
            err,
            GraphError::IndexOutOfRange {
                axis: "column",
                index: 4,
                ..
            }
        ));
        let err = CsrMatrix::from_edges(&[(3, 0)], 2, 2, id, id).unwrap_err();
        assert!(matches!(err, GraphError::IndexOutOfRange { axis: "row", .. }));
    }

    #[test]
    fn random_edges_match_adjacency_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let edges: BTreeSet<(u64, u64)> = (0..100)
            .map(|_| (rng.random_range(0..20), rng.random_range(0..20)))
            .collect();
        let list: Vec<_> = edges.iter().copied().collect();
        let m = CsrMatrix::from_edges(&list, 20, 20, id, id).unwrap();

        // naive oracle: adjacency sets
        let mut sets = vec![BTreeSet::new(); 20];
        for &(a, b) in &edges {
            sets[a as usize].insert(b);
        }
        for r in 0..20 {
            let expect: Vec<u64> = sets[r as usize].iter().copied().collect();
            assert_eq!(m.row(r), expect.as_slice());
        }
        let back: BTreeSet<(u64, u64)> = m.iter().collect();
        assert_eq!(back, edges);
        // row_ptr invariants
        assert_eq!(m.row_ptr()[0], 0);
        assert_eq!(*m.row_ptr().last().unwrap(), m.nnz());
        assert!(m.row_ptr().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn construction_is_deterministic() {
        let edges = [(3, 1), (0, 2), (3, 0), (1, 1)];
        let a = CsrMatrix::from_edges(&edges, 4, 4, id, id).unwrap();
        let b = CsrMatrix::from_edges(&edges, 4, 4, id, id).unwrap();
        assert_eq!(a, b);
    }
}
