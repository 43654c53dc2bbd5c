use std::collections::VecDeque;

use super::{BfsError, ParentVector, UNVISITED};
use crate::graph::{CsrMatrix, DenseBitmap, EdgeList};

/// `n x n` CSR whose row `u` lists the out-neighbors of `u`.
pub fn out_adjacency(g: &EdgeList) -> CsrMatrix {
    CsrMatrix::from_edges(g.edges(), g.n(), g.n(), |a| a, |b| b).expect("edge list ids are range-checked")
}

/// `n x n` CSR whose row `v` lists the in-neighbors of `v`.
pub fn in_adjacency(g: &EdgeList) -> CsrMatrix {
    let flipped: Vec<(u64, u64)> = g.edges().iter().map(|&(s, d)| (d, s)).collect();
    CsrMatrix::from_edges(&flipped, g.n(), g.n(), |a| a, |b| b).expect("edge list ids are range-checked")
}

fn check_source(rows: u64, s: u64) -> Result<(), BfsError> {
    if s >= rows {
        return Err(BfsError::SourceOutOfRange { vertex: s, n: rows });
    }
    Ok(())
}

/// Queue-based top-down search over out-neighbors.
pub fn seq_topdown(out: &CsrMatrix, s: u64) -> Result<ParentVector, BfsError> {
    check_source(out.rows(), s)?;
    let mut pv = ParentVector::new(out.rows(), s);
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &v in out.row(u) {
            if pv.get(v).is_none() {
                pv.set(v, u);
                queue.push_back(v);
            }
        }
    }
    Ok(pv)
}

/// Level-synchronous bottom-up search: every unvisited vertex scans its
/// in-neighbors and stops at the first one in the frontier.
pub fn seq_bottomup(inc: &CsrMatrix, s: u64) -> Result<ParentVector, BfsError> {
    check_source(inc.rows(), s)?;
    let n = inc.rows();
    let mut pv = ParentVector::new(n, s);
    let mut frontier = DenseBitmap::new(n);
    frontier.set(s);
    loop {
        let mut next = DenseBitmap::new(n);
        let mut found = false;
        for u in 0..n {
            if pv.as_slice()[u as usize] != UNVISITED {
                continue;
            }
            for &v in inc.row(u) {
                if frontier.get(v) {
                    pv.set(u, v);
                    next.set(u);
                    found = true;
                    break;
                }
            }
        }
        if !found {
            return Ok(pv);
        }
        frontier = next;
    }
}
