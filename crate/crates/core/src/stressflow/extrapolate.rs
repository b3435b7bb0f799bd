use serde::{Deserialize, Serialize};

use super::{tangent_unit, CriticalMask, FlowError, FlowStage, TangentFlow};
use crate::meshcore::{build_operators, trimesh_components, Vec3};
use crate::numerics::{solve_spd, SolveOptions};
use crate::slicing::Slice;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtrapolationReport {
    /// Vertices whose vector was recomputed.
    pub unknowns: usize,
    /// Unknown regions with no critical neighbour, filled with the mean.
    pub unanchored_regions: usize,
    /// Vertices whose harmonic vector had no usable tangent part.
    pub fallbacks: usize,
}

/// Harmonic extension of the rectified flow from the critical region.
///
/// Unknowns are the uncritical vertices plus any vertex with an invalid
/// vector. Each Cartesian component solves `L_UU x_U = −L_UK x_K` with
/// the cotangent Laplacian (the Dirichlet-energy minimizer with the known
/// vectors fixed), then each result is projected to its tangent plane and
/// normalized. Unknown regions not touching a known vertex receive the
/// slice's mean rectified vector, projected and normalized.
pub fn extrapolate_uncritical(
    slice: &Slice,
    flow: &TangentFlow,
    mask: &CriticalMask,
    opts: &SolveOptions,
) -> Result<(TangentFlow, ExtrapolationReport), FlowError> {
    flow.expect_stage(FlowStage::Rectified)?;
    let n = slice.vertex_count();
    if flow.len() != n || mask.critical.len() != n {
        return Err(FlowError::Mismatch(format!(
            "slice has {n} vertices, flow {}, mask {}",
            flow.len(),
            mask.critical.len()
        )));
    }
    let unknown: Vec<bool> = (0..n).map(|v| !mask.critical[v] || !flow.valid[v]).collect();
    let mut report = ExtrapolationReport {
        unknowns: unknown.iter().filter(|&&u| u).count(),
        ..Default::default()
    };
    let mut out = flow.vectors.clone();
    if report.unknowns == 0 {
        return Ok((
            TangentFlow {
                stage: FlowStage::Preprocessed,
                vectors: out,
                valid: vec![true; n],
            },
            report,
        ));
    }

    let mean = {
        let s = flow
            .vectors
            .iter()
            .zip(&flow.valid)
            .filter(|(_, &ok)| ok)
            .fold(Vec3::zeros(), |acc, (v, _)| acc + v);
        if s.norm() > 0.0 {
            s / s.norm()
        } else {
            return Err(FlowError::AllInvalid);
        }
    };

    let adj = slice.surface.vertex_adjacency();
    let (comp, ncomp) = trimesh_components(&adj, |v| unknown[v]);
    let mut anchored = vec![false; ncomp];
    for v in 0..n {
        if unknown[v] && adj[v].iter().any(|&w| !unknown[w]) {
            anchored[comp[v]] = true;
        }
    }
    report.unanchored_regions = anchored.iter().filter(|&&a| !a).count();
    if report.unanchored_regions > 0 {
        log::warn!(
            "layer {}: {} uncritical regions have no critical boundary; filled with the mean flow",
            slice.layer,
            report.unanchored_regions
        );
    }

    let solve_set: Vec<usize> = (0..n).filter(|&v| unknown[v] && anchored[comp[v]]).collect();
    let mut harmonic = vec![Vec3::zeros(); n];
    if !solve_set.is_empty() {
        let (_, ops) = build_operators(&slice.surface)?;
        let l = &ops.laplacian;
        let a = l.principal_submatrix(&solve_set);
        for d in 0..3 {
            let xk: Vec<f64> = (0..n)
                .map(|v| if unknown[v] { 0.0 } else { flow.vectors[v][d] })
                .collect();
            let lx = l.mul_vec(&xk);
            let rhs: Vec<f64> = solve_set.iter().map(|&v| -lx[v]).collect();
            let sol = solve_spd(&a, &rhs, opts)?;
            for (k, &v) in solve_set.iter().enumerate() {
                harmonic[v][d] = sol[k];
            }
        }
    }

    for v in 0..n {
        if !unknown[v] {
            continue;
        }
        let nv = slice.normals[v];
        let candidate = if anchored[comp[v]] {
            tangent_unit(&harmonic[v], &nv)
        } else {
            None
        };
        out[v] = match candidate {
            Some(t) => t,
            None => {
                if anchored[comp[v]] {
                    report.fallbacks += 1;
                }
                tangent_unit(&mean, &nv).unwrap_or_else(|| any_tangent(&nv))
            }
        };
    }
    if report.fallbacks > 0 {
        log::debug!(
            "layer {}: {} extrapolated vectors fell back to the mean",
            slice.layer,
            report.fallbacks
        );
    }
    Ok((
        TangentFlow {
            stage: FlowStage::Preprocessed,
            vectors: out,
            valid: vec![true; n],
        },
        report,
    ))
}

fn any_tangent(n: &Vec3) -> Vec3 {
    let k = n.iamin();
    n.cross(&Vec3::ith(k, 1.0)).normalize()
}
