use super::{Adjacency, GraphError};

/// Doubly compressed sparse columns.
///
/// Only the `nzc` nonempty columns get an entry: `jc` lists their ids
/// (strictly increasing) and `cp` (length `nzc + 1`) points into the row ids
/// `ir`. Index storage is `nnz + 2 * nzc + 1` words no matter how wide the
/// block is, which is what makes hypersparse 2D blocks affordable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcscMatrix {
    ir: Vec<u64>,
    cp: Vec<u64>,
    jc: Vec<u64>,
    rows: u64,
    cols: u64,
}

impl DcscMatrix {
    /// Stores each edge `(a, b)` at `(row_map(a), col_map(b))`.
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
            mapped.push((c, r));
        }
        mapped.sort_unstable();

        let mut ir = Vec::with_capacity(mapped.len());
        let mut jc = Vec::new();
        let mut cp = vec![0u64];
        for (k, &(c, r)) in mapped.iter().enumerate() {
            if jc.last() != Some(&c) {
                if k > 0 {
                    cp.push(k as u64);
                }
                jc.push(c);
            }
            ir.push(r);
        }
        if !jc.is_empty() {
            cp.push(ir.len() as u64);
        }

        Ok(DcscMatrix { ir, cp, jc, rows, cols })
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn cols(&self) -> u64 {
        self.cols
    }

    pub fn ir(&self) -> &[u64] {
        &self.ir
    }

    pub fn cp(&self) -> &[u64] {
        &self.cp
    }

    pub fn jc(&self) -> &[u64] {
        &self.jc
    }

    pub fn nzc(&self) -> u64 {
        self.jc.len() as u64
    }

    /// Row ids of column `j`, found by binary search over `jc`.
    #[inline]
    pub fn column(&self, j: u64) -> &[u64] {
        match self.jc.binary_search(&j) {
            Ok(k) => &self.ir[self.cp[k] as usize..self.cp[k + 1] as usize],
            Err(_) => &[],
        }
    }

    /// Nonempty columns with their row ids, in column order.
    pub fn columns(&self) -> impl Iterator<Item = (u64, &[u64])> + '_ {
        self.jc
            .iter()
            .enumerate()
            .map(move |(k, &j)| (j, &self.ir[self.cp[k] as usize..self.cp[k + 1] as usize]))
    }
}

impl Adjacency for DcscMatrix {
    fn key_extent(&self) -> u64 {
        self.cols
    }

    fn value_extent(&self) -> u64 {
        self.rows
    }

    fn nnz(&self) -> u64 {
        self.ir.len() as u64
    }

    #[inline]
    fn adjacency(&self, key: u64) -> &[u64] {
        self.column(key)
    }

    fn index_words(&self) -> u64 {
        self.ir.len() as u64 + self.cp.len() as u64 + self.jc.len() as u64
    }
}
