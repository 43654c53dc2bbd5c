use thiserror::Error;

use super::{ParentVector, UNVISITED};
use crate::graph::CsrMatrix;

/// First failed check of a parent tree, with a witness vertex.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("parent array has {actual} entries, graph has {expected} vertices")]
    WrongLength { expected: u64, actual: u64 },
    #[error("source {root} is not its own parent")]
    SourceNotRoot { root: u64 },
    #[error("vertex {vertex} has out-of-range parent {parent}")]
    ParentOutOfRange { vertex: u64, parent: u64 },
    #[error("vertex {vertex} has parent {parent} but the edge ({parent}, {vertex}) does not exist")]
    MissingEdge { vertex: u64, parent: u64 },
    #[error("vertex {vertex} does not lead back to the source")]
    NotRooted { vertex: u64 },
    #[error("vertex {vertex} is reachable from reached vertex {from} but has no parent")]
    Unreached { vertex: u64, from: u64 },
    #[error("vertex {vertex} sits at level {level}, deeper than its in-neighbor {from} at level {from_level} allows")]
    TooDeep {
        vertex: u64,
        level: u64,
        from: u64,
        from_level: u64,
    },
}

/// Depth of every vertex in the tree (`None` for unreached vertices).
pub fn tree_levels(pv: &ParentVector) -> Result<Vec<Option<u64>>, Violation> {
    let n = pv.len();
    let parent = pv.as_slice();
    let s = pv.source();
    if s >= n || parent[s as usize] != s {
        return Err(Violation::SourceNotRoot { root: s });
    }
    let mut level = vec![None; n as usize];
    level[s as usize] = Some(0);
    let mut path = Vec::new();
    for v in 0..n {
        if parent[v as usize] == UNVISITED || level[v as usize].is_some() {
            continue;
        }
        // walk up until a vertex with a known level, then unwind
        let mut u = v;
        while level[u as usize].is_none() {
            let p = parent[u as usize];
            if p == UNVISITED || path.len() as u64 > n {
                return Err(Violation::NotRooted { vertex: v });
            }
            if p >= n {
                return Err(Violation::ParentOutOfRange { vertex: u, parent: p });
            }
            path.push(u);
            u = p;
        }
        let mut d = level[u as usize].expect("loop exit");
        while let Some(w) = path.pop() {
            d += 1;
            level[w as usize] = Some(d);
        }
    }
    Ok(level)
}

/// Graph500-style check of a BFS tree against the out-adjacency `g`:
/// the source is the root, tree edges exist, the tree is rooted, and no
/// edge leaves a reached vertex towards an unreached or deeper-than-next
/// vertex. Together these pin the levels to BFS distances.
pub fn validate_tree(g: &CsrMatrix, s: u64, pv: &ParentVector) -> Result<(), Violation> {
    let n = g.rows();
    if pv.len() != n {
        return Err(Violation::WrongLength {
            expected: n,
            actual: pv.len(),
        });
    }
    if pv.source() != s || s >= n || pv.as_slice()[s as usize] != s {
        return Err(Violation::SourceNotRoot { root: s });
    }
    for (v, &p) in pv.as_slice().iter().enumerate() {
        let v = v as u64;
        if p == UNVISITED || v == s {
            continue;
        }
        if p >= n {
            return Err(Violation::ParentOutOfRange { vertex: v, parent: p });
        }
        if !g.contains(p, v) {
            return Err(Violation::MissingEdge { vertex: v, parent: p });
        }
    }
    let level = tree_levels(pv)?;
    for (u, lu) in level.iter().enumerate() {
        let Some(lu) = *lu else { continue };
        for &v in g.row(u as u64) {
            match level[v as usize] {
                None => {
                    return Err(Violation::Unreached {
                        vertex: v,
                        from: u as u64,
                    })
                }
                Some(lv) if lv > lu + 1 => {
                    return Err(Violation::TooDeep {
                        vertex: v,
                        level: lv,
                        from: u as u64,
                        from_level: lu,
                    })
                }
                _ => {}
            }
        }
    }
    Ok(())
}
