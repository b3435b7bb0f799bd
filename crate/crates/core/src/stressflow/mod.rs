//! Per-slice stress-flow preprocessing: tangential projection with an
//! in-plane quarter turn, orientation rectification, critical-region
//! classification and harmonic extrapolation into uncritical regions.

mod critical;
mod export;
mod extrapolate;
mod project;
mod rectify;

pub use critical::{classify_critical, classify_principal, critical_components, CriticalMask, Thresholds};
pub use export::write_flow_csv;
pub use extrapolate::{extrapolate_uncritical, ExtrapolationReport};
pub use project::project_orthogonal;
pub use rectify::{rectify, rectify_with, RectifyAxis, RectifyReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meshcore::{MeshError, Vec3};
use crate::numerics::SolveError;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("every vector on the slice is invalid")]
    AllInvalid,
    #[error("flow is at stage {found:?}, expected {expected:?}")]
    WrongStage { expected: FlowStage, found: FlowStage },
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("length mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("linear solve failed: {0}")]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlowStage {
    /// Projected to the tangent plane and turned a quarter turn about `n`.
    ProjectedOrthogonal,
    /// Consistently oriented along the dominant axis.
    Rectified,
    /// Critical vectors kept, the rest harmonically extended.
    Preprocessed,
}

/// Per-vertex tangent unit vectors on a slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentFlow {
    pub stage: FlowStage,
    pub vectors: Vec<Vec3>,
    /// `false` where the vector is undefined (zero vector stored).
    pub valid: Vec<bool>,
}

impl TangentFlow {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    fn expect_stage(&self, expected: FlowStage) -> Result<(), FlowError> {
        if self.stage != expected {
            return Err(FlowError::WrongStage {
                expected,
                found: self.stage,
            });
        }
        Ok(())
    }
}

/// Unit tangent part of `v` at normal `n`, or `None` if it vanishes.
pub(crate) fn tangent_unit(v: &Vec3, n: &Vec3) -> Option<Vec3> {
    let t = v - n * v.dot(n);
    let len = t.norm();
    (len > 1e-12 * v.norm().max(f64::MIN_POSITIVE) && len > 0.0).then(|| t / len)
}
