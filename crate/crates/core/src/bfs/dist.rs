use std::ops::Range;

use super::BfsError;
use crate::exec::Backend;
use crate::graph::{Adjacency, Datastructure, EdgeList, LocalMatrix};
use crate::grid::{Axis, Coords, ProcGrid, VertexOwnership};

/// One rank's share of the graph.
///
/// Rank `(i, j)` holds every edge `(src, dst)` with `dst` in row block `R_i`
/// and `src` in column block `C_j`. `forward` maps a local source offset to
/// local destination offsets; `reverse` maps a local destination offset to
/// local source offsets.
#[derive(Debug, Clone)]
pub struct LocalGraph {
    pub coords: Coords,
    pub row_block: Range<u64>,
    pub col_block: Range<u64>,
    pub segment: Range<u64>,
    pub forward: LocalMatrix,
    pub reverse: LocalMatrix,
    /// Out-degree of each vertex in `segment`.
    pub segment_degrees: Vec<u64>,
}

impl LocalGraph {
    pub fn nnz(&self) -> u64 {
        self.forward.nnz()
    }

    /// Columns of the block (sources) holding at least one edge.
    pub fn nonempty_columns(&self) -> u64 {
        self.forward.nonempty_keys()
    }

    /// Index words of the block `A_ij` (rows = destinations, columns =
    /// sources) stored in `ds`: CSR pays one pointer per row of the block,
    /// DCSC two words per nonempty column.
    pub fn block_index_words(&self, ds: Datastructure) -> u64 {
        let rows = self.row_block.end - self.row_block.start;
        match ds {
            Datastructure::Csr => self.nnz() + rows + 1,
            Datastructure::Dcsc => self.nnz() + 2 * self.nonempty_columns() + 1,
        }
    }
}

/// A graph laid out over a process grid.
#[derive(Debug, Clone)]
pub struct DistGraph {
    ownership: VertexOwnership,
    datastructure: Datastructure,
    ranks: Vec<LocalGraph>,
    non_isolated: Vec<bool>,
    input_edges: u64,
    stored_edges: u64,
    directed: bool,
}

impl DistGraph {
    pub fn distribute(g: &EdgeList, grid: ProcGrid, ds: Datastructure, backend: Backend) -> Result<Self, BfsError> {
        let own = VertexOwnership::new(g.n(), grid);
        let mut buckets: Vec<Vec<(u64, u64)>> = vec![Vec::new(); grid.size()];
        for &(src, dst) in g.edges() {
            let c = own.block_of_edge(src, dst)?;
            let col0 = own.col_block(c.col).start;
            let row0 = own.row_block(c.row).start;
            buckets[grid.rank(c)].push((src - col0, dst - row0));
        }
        let degrees = g.out_degrees();
        let ranks = backend.map(&buckets, |r, pairs| {
            let coords = grid.coords(r);
            let row_block = own.row_block(coords.row);
            let col_block = own.col_block(coords.col);
            let segment = own.range(Axis::Segment, coords);
            let rows = row_block.end - row_block.start;
            let cols = col_block.end - col_block.start;
            let forward = LocalMatrix::keyed(ds, pairs, cols, rows)?;
            let flipped: Vec<(u64, u64)> = pairs.iter().map(|&(s, d)| (d, s)).collect();
            let reverse = LocalMatrix::keyed(ds, &flipped, rows, cols)?;
            let segment_degrees = degrees[segment.start as usize..segment.end as usize].to_vec();
            Ok::<_, BfsError>(LocalGraph {
                coords,
                row_block,
                col_block,
                segment,
                forward,
                reverse,
                segment_degrees,
            })
        });
        Ok(DistGraph {
            ownership: own,
            datastructure: ds,
            ranks: ranks.into_iter().collect::<Result<_, _>>()?,
            non_isolated: g.non_isolated(),
            input_edges: g.input_edge_count(),
            stored_edges: g.len() as u64,
            directed: g.is_directed(),
        })
    }

    pub fn n(&self) -> u64 {
        self.ownership.n()
    }

    pub fn grid(&self) -> ProcGrid {
        self.ownership.grid()
    }

    pub fn ownership(&self) -> &VertexOwnership {
        &self.ownership
    }

    pub fn datastructure(&self) -> Datastructure {
        self.datastructure
    }

    /// Per-rank storage in linear rank order.
    pub fn ranks(&self) -> &[LocalGraph] {
        &self.ranks
    }

    pub fn is_isolated(&self, v: u64) -> bool {
        !self.non_isolated[v as usize]
    }

    /// Edge count used for TEPS (undirected edges counted once).
    pub fn input_edges(&self) -> u64 {
        self.input_edges
    }

    /// Directed pairs actually stored over all ranks.
    pub fn stored_edges(&self) -> u64 {
        self.stored_edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }
}
