use serde::{Deserialize, Serialize};

use super::TrajError;
use crate::meshcore::{build_operators, FaceGradientOperator, Vec3};
use crate::numerics::{default_epsilon, solve_regularized_ls, SolveOptions, SparseMatrix};
use crate::slicing::Slice;
use crate::stressflow::{FlowStage, TangentFlow};

/// Trajectory-generating scalar field on a slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFieldOnSlice {
    pub values: Vec<f64>,
    /// Area-weighted `Σ A_f ‖∇φ̂_f − t_f‖²` before calibration.
    pub residual: f64,
    /// Calibration factor applied to the raw solution.
    pub scale: f64,
    pub eps: f64,
}

/// Per-face target: mean of the corner vectors projected into the face
/// plane and renormalized (zero where the projection vanishes).
pub fn face_targets(slice: &Slice, flow: &TangentFlow) -> Vec<Vec3> {
    let m = &slice.surface;
    (0..m.faces.len())
        .map(|f| {
            let fv = m.faces[f];
            let mean = (flow.vectors[fv[0]] + flow.vectors[fv[1]] + flow.vectors[fv[2]]) / 3.0;
            let n = m.face_normal(f);
            let t = mean - n * mean.dot(&n);
            let len = t.norm();
            if len > 1e-12 {
                t / len
            } else {
                Vec3::zeros()
            }
        })
        .collect()
}

/// `√A_f`-weighted gradient rows, so that `‖Gφ − t‖²` is the discrete
/// `∫‖∇φ − F‖²` over the slice. Returns the matrix and weighted targets.
pub fn weighted_gradient(grad: &FaceGradientOperator, targets: &[Vec3]) -> (SparseMatrix, Vec<f64>) {
    let w: Vec<f64> = grad.areas.iter().map(|a| a.sqrt()).collect();
    let trip: Vec<(usize, usize, f64)> = grad.matrix.triplets().map(|(r, c, v)| (r, c, v * w[r / 3])).collect();
    let g = SparseMatrix::from_triplets(grad.matrix.nrows(), grad.matrix.ncols(), &trip)
        .expect("rescaling keeps entries finite");
    let t = targets
        .iter()
        .enumerate()
        .flat_map(|(f, v)| [v.x * w[f], v.y * w[f], v.z * w[f]])
        .collect();
    (g, t)
}

/// Fits `φ̂ = argmin ‖Gφ − F‖² + ε‖φ‖²` in closed form, then rescales it
/// so the median face gradient norm is 1.
pub fn fit_scalar_field(
    slice: &Slice,
    flow: &TangentFlow,
    eps: Option<f64>,
    opts: &SolveOptions,
) -> Result<ScalarFieldOnSlice, TrajError> {
    if flow.stage != FlowStage::Preprocessed || flow.valid.iter().any(|&v| !v) {
        return Err(TrajError::InvalidArgument(
            "flow must be preprocessed and complete".into(),
        ));
    }
    if flow.len() != slice.vertex_count() {
        return Err(TrajError::InvalidArgument(
            "flow length does not match the slice".into(),
        ));
    }
    let (grad, _) = build_operators(&slice.surface)?;
    let targets = face_targets(slice, flow);
    let (g, t) = weighted_gradient(&grad, &targets);
    let eps = eps.unwrap_or_else(|| default_epsilon(&g));
    let mut phi = solve_regularized_ls(&g, &t, eps, opts)?;

    // the exact minimizer has zero mean on each connected region
    let (comp, ncomp) = slice.surface.vertex_components();
    let mut sums = vec![(0.0, 0usize); ncomp];
    for (v, &c) in comp.iter().enumerate() {
        sums[c].0 += phi[v];
        sums[c].1 += 1;
    }
    for (v, &c) in comp.iter().enumerate() {
        phi[v] -= sums[c].0 / sums[c].1 as f64;
    }

    let grads = grad.apply(&slice.surface.faces, &phi);
    let residual: f64 = grads
        .iter()
        .zip(&targets)
        .zip(&grad.areas)
        .map(|((g, t), a)| a * (g - t).norm_squared())
        .sum();
    let mut norms: Vec<f64> = grads.iter().map(|g| g.norm()).collect();
    norms.sort_by(f64::total_cmp);
    let median = if norms.is_empty() {
        0.0
    } else if norms.len() % 2 == 1 {
        norms[norms.len() / 2]
    } else {
        0.5 * (norms[norms.len() / 2 - 1] + norms[norms.len() / 2])
    };
    let scale = if median > 0.0 { 1.0 / median } else { 1.0 };
    Ok(ScalarFieldOnSlice {
        values: phi.into_iter().map(|v| v * scale).collect(),
        residual,
        scale,
        eps,
    })
}
