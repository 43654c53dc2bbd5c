use super::{Adjacency, GraphError, Spa, SparseVector};

/// Sparse matrix times sparse vector over the (select-second, min) semiring.
///
/// `a` is keyed by frontier index (its keys index `f`). Every adjacency entry
/// `v` of a present key `u` receives `f(u)`; when several keys reach the same
/// `v` the smallest value wins. Output is sorted and has length
/// `a.value_extent()`.
pub fn spmsv<A: Adjacency + ?Sized>(a: &A, f: &SparseVector, spa: &mut Spa) -> Result<SparseVector, GraphError> {
    if f.len() != a.key_extent() {
        return Err(GraphError::LengthMismatch {
            expected: a.key_extent(),
            actual: f.len(),
        });
    }
    if spa.len() != a.value_extent() {
        return Err(GraphError::LengthMismatch {
            expected: a.value_extent(),
            actual: spa.len(),
        });
    }
    for &(u, value) in f.entries() {
        for &v in a.adjacency(u) {
            spa.accumulate(v, value);
        }
    }
    Ok(spa.drain_sorted())
}
