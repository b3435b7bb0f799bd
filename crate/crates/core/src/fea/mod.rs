//! Linear-elastic tet4 finite elements and principal stress decomposition.
//!
//! Lengths are in millimetres and forces in newtons, so stresses come out
//! in N/mm² (MPa). Any consistent unit system works since the solver is
//! linear.

mod principal;
mod solver;
mod stress_csv;

pub use principal::{principal_decomposition, principal_of, PrincipalStress, PrincipalStressField};
pub use solver::{solve_elasticity, BoundaryConditions, DofConstraint, FeaSolution, Material};
pub use stress_csv::{parse_stress_csv, read_stress_csv, write_stress_csv};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meshcore::Vec3;
use crate::numerics::SolveError;

#[derive(Debug, Error)]
pub enum FeaError {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid boundary conditions: {0}")]
    InvalidBoundary(String),
    #[error("linear solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error("stress csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Symmetric 3×3 tensor stored as `[xx, yy, zz, xy, xz, yz]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor(pub [f64; 6]);

impl SymTensor {
    pub fn from_matrix(m: &nalgebra::Matrix3<f64>) -> Self {
        Self([
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(1, 2)] + m[(2, 1)]),
        ])
    }

    pub fn to_matrix(&self) -> nalgebra::Matrix3<f64> {
        let [xx, yy, zz, xy, xz, yz] = self.0;
        nalgebra::Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
    }

    pub fn diagonal(d: [f64; 3]) -> Self {
        Self([d[0], d[1], d[2], 0.0, 0.0, 0.0])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.map(|c| c * s))
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.to_matrix() * v
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Weighted sum `Σ wᵢ Tᵢ`.
    pub fn combine<'a>(items: impl IntoIterator<Item = (f64, &'a SymTensor)>) -> Self {
        let mut out = [0.0; 6];
        for (w, t) in items {
            for k in 0..6 {
                out[k] += w * t.0[k];
            }
        }
        Self(out)
    }
}

/// Per-node Cauchy stress.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StressTensorField {
    pub tensors: Vec<SymTensor>,
}

impl StressTensorField {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Barycentric interpolation over the given nodes.
    pub fn interpolate(&self, nodes: &[usize], weights: &[f64]) -> SymTensor {
        SymTensor::combine(weights.iter().zip(nodes).map(|(&w, &n)| (w, &self.tensors[n])))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            tensors: self.tensors.iter().map(|t| t.scaled(s)).collect(),
        }
    }
}
