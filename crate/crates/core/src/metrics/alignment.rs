use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::fea::{principal_of, StressTensorField};
use crate::meshcore::spatial::TetLocator;
use crate::meshcore::{TetMesh, Vec3};
use crate::trajopt::{LayerToolpath, PathKind};

/// Trajectory stress alignment `β = |f·d|` over critical infill points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryAlignment {
    pub mean: f64,
    /// Per-layer mean, `None` for layers without critical points.
    pub per_layer: Vec<Option<f64>>,
    /// Number of critical points `K`.
    pub critical_points: usize,
    pub sampled_points: usize,
}

/// `β̄` with a caller-supplied field lookup returning the unit maximum
/// principal direction and the critical flag at a point (`None` where the
/// point cannot be located). Only infill points count.
pub fn trajectory_alignment_with(
    layers: &[LayerToolpath],
    mut lookup: impl FnMut(&Vec3) -> Option<(Vec3, bool)>,
) -> Result<TrajectoryAlignment, MetricsError> {
    let mut total = 0.0;
    let mut k = 0usize;
    let mut sampled = 0usize;
    let mut per_layer = Vec::with_capacity(layers.len());
    for layer in layers {
        let (mut sum, mut cnt) = (0.0, 0usize);
        for line in layer.elements.iter().filter(|e| e.kind == PathKind::Infill) {
            for (i, p) in line.points.iter().enumerate() {
                sampled += 1;
                let d = line.tangent(i);
                if d == Vec3::zeros() {
                    continue;
                }
                if let Some((f, true)) = lookup(p) {
                    sum += f.dot(&d).abs().min(1.0);
                    cnt += 1;
                }
            }
        }
        per_layer.push((cnt > 0).then(|| sum / cnt as f64));
        total += sum;
        k += cnt;
    }
    if k == 0 {
        return Err(MetricsError::NoCriticalPoints);
    }
    Ok(TrajectoryAlignment {
        mean: total / k as f64,
        per_layer,
        critical_points: k,
        sampled_points: sampled,
    })
}

/// `β̄` against a nodal stress field on a tet mesh. The stress tensor is
/// interpolated at each point's barycentric location; the point is
/// critical if the node with the largest barycentric weight is.
pub fn trajectory_alignment(
    layers: &[LayerToolpath],
    mesh: &TetMesh,
    stress: &StressTensorField,
    node_critical: &[bool],
) -> Result<TrajectoryAlignment, MetricsError> {
    if stress.len() != mesh.vertices.len() || node_critical.len() != mesh.vertices.len() {
        return Err(MetricsError::InvalidArgument(
            "field sizes do not match the mesh".into(),
        ));
    }
    let locator = TetLocator::new(mesh);
    trajectory_alignment_with(layers, |p| {
        let (t, w) = locator.locate(mesh, p)?;
        let tet = mesh.tets[t];
        let dominant = (0..4).max_by(|&a, &b| w[a].total_cmp(&w[b]).then(b.cmp(&a))).unwrap();
        let f = principal_of(&stress.interpolate(&tet, &w)).d1();
        Some((f, node_critical[tet[dominant]]))
    })
}
