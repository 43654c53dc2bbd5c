//! Distributed-memory breadth-first search over a 2D checkerboard
//! decomposition, run on a simulated process grid.

pub mod bench;
pub mod bfs;
pub mod costmodel;
pub mod exec;
pub mod graph;
pub mod grid;
pub mod netsim;
pub mod rmat;
