//! Time-indexed project scheduling with a net-present-value objective,
//! solved approximately on a geometrically aggregated time grid.

pub mod bench;
pub mod eval;
pub mod graph;
pub mod grid;
pub mod io;
pub mod mip;
pub mod model;
pub mod pipeline;
pub mod reconstruct;
pub mod solver;
