//! Triangle and tetrahedral meshes, their file formats, and the discrete
//! operators built on them (per-face gradient, cotangent/FEM Laplacian,
//! lumped mass, vertex normals).

pub mod io;
mod operators;
mod select;
pub mod shapes;
pub mod spatial;
mod tetmesh;
mod trimesh;

pub(crate) use operators::tet_hat_gradients;
pub use operators::{
    build_operators, build_tet_operators, vertex_normals, DiscreteOperators, FaceGradientOperator, TetGradientOperator,
};
pub use select::Selector;
pub use tetmesh::TetMesh;
pub(crate) use trimesh::components as trimesh_components;
pub use trimesh::TriMesh;

use thiserror::Error;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Faces with area at or below this are degenerate (mm²).
pub const DEGENERATE_AREA: f64 = 1e-12;
/// Tetrahedra with volume at or below this are degenerate (mm³).
pub const DEGENERATE_VOLUME: f64 = 1e-15;
/// STL vertices closer than this are welded (mm).
pub const STL_WELD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{element} {element_index} references vertex {index}, but only {count} vertices exist")]
    IndexOutOfRange {
        element: &'static str,
        element_index: usize,
        index: i64,
        count: usize,
    },

    #[error("face {face} is degenerate (area {area:.3e} mm²)")]
    DegenerateFace { face: usize, area: f64 },

    #[error("tetrahedron {tet} is degenerate (volume {volume:.3e} mm³)")]
    DegenerateTet { tet: usize, volume: f64 },

    #[error("edge ({a}, {b}) is shared by {count} faces")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("mesh is not orientable")]
    NonOrientable,

    #[error("faces are not consistently wound (edge ({a}, {b}) traversed twice in the same direction)")]
    InconsistentWinding { a: usize, b: usize },

    #[error("tetrahedral boundary is not a closed 2-manifold: {0}")]
    OpenBoundary(String),

    #[error("vertex {0} has no incident faces")]
    IsolatedVertex(usize),

    #[error("empty mesh: {0}")]
    Empty(String),

    #[error("unsupported or unreadable mesh format: {0}")]
    UnsupportedFormat(String),
}

#[inline]
pub(crate) fn sorted3(f: [usize; 3]) -> [usize; 3] {
    let mut k = f;
    k.sort_unstable();
    k
}

#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}
