//! Offset slicing: geodesic distance from a base region by the heat
//! method, and curved layers extracted as level sets of that distance.

mod alignment;
mod collapse;
mod export;
mod geodesic;
mod marching;

pub use alignment::{slicing_alignment, SliceAlignment};
pub use collapse::collapse_short_edges;
pub use export::{write_slice_csv, write_slice_obj};
pub use geodesic::{geodesic_heat, graph_distance, DistanceField, HeatOptions};
pub use marching::{extract_slices, level_set, Slice, SliceOptions, VertexOrigin};

use thiserror::Error;

use crate::meshcore::MeshError;
use crate::numerics::SolveError;

#[derive(Debug, Error)]
pub enum SlicingError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("linear solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("{count} nodes are not connected to the source (first: {nodes:?})")]
    Unreachable { count: usize, nodes: Vec<usize> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no critical nodes on any slice; lower theta_a or theta_s")]
    NoCriticalNodes,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
