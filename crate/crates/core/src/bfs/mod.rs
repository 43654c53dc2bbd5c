//! Breadth-first search: sequential references, tree validation, and the
//! distributed 2D top-down / bottom-up / direction-optimizing engine.

mod direction;
mod dist;
mod engine;
mod parent;
mod seq;
mod validate;

use thiserror::Error;

use crate::graph::GraphError;
use crate::grid::GridError;
use crate::netsim::NetError;

pub use direction::{choose_direction, Direction, FrontierSummary, HeuristicParams, Mode};
pub use dist::{DistGraph, LocalGraph};
pub use engine::{run_search, LevelStats, SearchStats};
pub use parent::{ParentVector, UNVISITED};
pub use seq::{in_adjacency, out_adjacency, seq_bottomup, seq_topdown};
pub use validate::{tree_levels, validate_tree, Violation};

#[derive(Debug, Error)]
pub enum BfsError {
    #[error("source {vertex} is outside [0, {n})")]
    SourceOutOfRange { vertex: u64, n: u64 },
    #[error("source {0} is isolated")]
    IsolatedSource(u64),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Grid(#[from] GridError),
}
