use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{collapse_short_edges, SlicingError};
use crate::fea::{principal_of, PrincipalStress, StressTensorField, SymTensor};
use crate::meshcore::{
    build_tet_operators, edge_key, vertex_normals, MeshError, TetGradientOperator, TetMesh, TriMesh, Vec3,
    DEGENERATE_AREA,
};

/// Crossing parameters closer than this to an edge end snap to the vertex.
const SNAP: f64 = 1e-6;

/// Where a slice vertex sits inside the tet mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexOrigin {
    pub tet: usize,
    /// Barycentric weights over the tet's four nodes (sum to 1).
    pub weights: [f64; 4],
}

/// One curved layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub layer: usize,
    /// Level value `layer × layer_height` (mm).
    pub iso: f64,
    pub surface: TriMesh,
    /// Unit normals, oriented along increasing distance.
    pub normals: Vec<Vec3>,
    pub tensors: Vec<SymTensor>,
    pub principal: Vec<PrincipalStress>,
    /// Empty for slices not cut from a tet mesh.
    pub origins: Vec<VertexOrigin>,
    pub critical: Option<Vec<bool>>,
}

impl Slice {
    /// Builds a slice directly from a surface and per-vertex stress.
    pub fn from_surface(surface: TriMesh, tensors: Vec<SymTensor>, layer: usize, iso: f64) -> Result<Self, MeshError> {
        assert_eq!(surface.vertices.len(), tensors.len());
        let normals = match &surface.normals {
            Some(n) => n.clone(),
            None => vertex_normals(&surface)?,
        };
        let principal = tensors.iter().map(principal_of).collect();
        Ok(Self {
            layer,
            iso,
            surface,
            normals,
            tensors,
            principal,
            origins: Vec::new(),
            critical: None,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.surface.vertices.len()
    }

    pub fn area(&self) -> f64 {
        self.surface.total_area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SliceOptions {
    /// Distance between consecutive layers (mm).
    pub layer_height: f64,
    /// Collapse slice edges shorter than this fraction of the mean edge
    /// length; zero disables the pass.
    pub collapse_ratio: f64,
}

impl Default for SliceOptions {
    fn default() -> Self {
        Self {
            layer_height: 0.1,
            collapse_ratio: 0.0,
        }
    }
}

/// Triangulated level set `{φ = c}` with per-vertex tet origins. Faces are
/// wound so their normals follow `∇φ`.
pub fn level_set(
    mesh: &TetMesh,
    grad: &TetGradientOperator,
    phi: &[f64],
    c: f64,
) -> Option<(TriMesh, Vec<VertexOrigin>)> {
    let mut keys: HashMap<(usize, usize), usize> = HashMap::new();
    let mut verts: Vec<Vec3> = Vec::new();
    let mut origins: Vec<VertexOrigin> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (ti, tet) in mesh.tets.iter().enumerate() {
        let above: [bool; 4] = tet.map(|v| phi[v] > c);
        let n_above = above.iter().filter(|&&a| a).count();
        if n_above == 0 || n_above == 4 {
            continue;
        }
        let mut crossing = |i: usize, j: usize| -> usize {
            let (a, b) = edge_key(tet[i], tet[j]);
            let (la, lb) = if a == tet[i] { (i, j) } else { (j, i) };
            let t = (c - phi[a]) / (phi[b] - phi[a]);
            let (key, w) = if t < SNAP {
                ((a, a), [(la, 1.0)].to_vec())
            } else if t > 1.0 - SNAP {
                ((b, b), [(lb, 1.0)].to_vec())
            } else {
                ((a, b), [(la, 1.0 - t), (lb, t)].to_vec())
            };
            *keys.entry(key).or_insert_with(|| {
                let mut weights = [0.0; 4];
                for (l, x) in w {
                    weights[l] = x;
                }
                let p = if key.0 == key.1 {
                    mesh.vertices[key.0]
                } else {
                    mesh.vertices[a] + (mesh.vertices[b] - mesh.vertices[a]) * t
                };
                verts.push(p);
                origins.push(VertexOrigin { tet: ti, weights });
                verts.len() - 1
            })
        };
        let g = (0..4).fold(Vec3::zeros(), |acc, k| acc + grad.hat_gradients[ti][k] * phi[tet[k]]);
        let mut tris: Vec<[usize; 3]> = Vec::with_capacity(2);
        if n_above == 1 || n_above == 3 {
            let lone = (0..4).find(|&k| above[k] == (n_above == 1)).unwrap();
            let others: Vec<usize> = (0..4).filter(|&k| k != lone).collect();
            tris.push([
                crossing(lone, others[0]),
                crossing(lone, others[1]),
                crossing(lone, others[2]),
            ]);
        } else {
            let lo: Vec<usize> = (0..4).filter(|&k| !above[k]).collect();
            let hi: Vec<usize> = (0..4).filter(|&k| above[k]).collect();
            let q = [
                crossing(lo[0], hi[0]),
                crossing(lo[0], hi[1]),
                crossing(lo[1], hi[1]),
                crossing(lo[1], hi[0]),
            ];
            tris.push([q[0], q[1], q[2]]);
            tris.push([q[0], q[2], q[3]]);
        }
        for mut f in tris {
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                continue;
            }
            let n = (verts[f[1]] - verts[f[0]]).cross(&(verts[f[2]] - verts[f[0]]));
            if !(0.5 * n.norm() > DEGENERATE_AREA) {
                continue;
            }
            if n.dot(&g) < 0.0 {
                f.swap(1, 2);
            }
            faces.push(f);
        }
    }
    if faces.is_empty() {
        return None;
    }
    // drop vertices only referenced by discarded triangles
    let mut remap = vec![usize::MAX; verts.len()];
    let mut new_verts = Vec::new();
    let mut new_origins = Vec::new();
    for f in faces.iter_mut() {
        for v in f.iter_mut() {
            if remap[*v] == usize::MAX {
                remap[*v] = new_verts.len();
                new_verts.push(verts[*v]);
                new_origins.push(origins[*v]);
            }
            *v = remap[*v];
        }
    }
    let surface = build_surface(new_verts, faces)?;
    Some((surface, new_origins))
}

/// Builds a manifold surface, dropping faces on over-shared edges if the
/// raw level set pinches.
fn build_surface(verts: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Option<TriMesh> {
    match TriMesh::new(verts.clone(), faces.clone()) {
        Ok(m) => return Some(m),
        Err(e) => log::debug!("level set needs cleanup: {e}"),
    }
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for f in &faces {
        for k in 0..3 {
            *count.entry(edge_key(f[k], f[(k + 1) % 3])).or_default() += 1;
        }
    }
    let kept: Vec<[usize; 3]> = faces
        .into_iter()
        .filter(|f| (0..3).all(|k| count[&edge_key(f[k], f[(k + 1) % 3])] <= 2))
        .collect();
    if kept.is_empty() {
        return None;
    }
    // compaction is handled by submesh
    let m = TriMesh {
        vertices: verts,
        faces: kept,
        normals: None,
    };
    let (sub, _) = m.submesh(|_| true);
    TriMesh::new_oriented(sub.vertices, sub.faces).ok()
}

/// Cuts `mesh` into layers at `φ = k·layer_height`, `k = 0, 1, …` while
/// `k·layer_height ≤ max φ`.
///
/// The extreme levels are nudged inside `[min φ, max φ]` so that a base or
/// top level coinciding with mesh nodes still produces a surface; the
/// recorded `iso` stays exact. Slices with area below `layer_height²` are
/// dropped, except for the lone base slice when `layer_height > max φ`.
pub fn extract_slices(
    mesh: &TetMesh,
    phi: &[f64],
    stress: &StressTensorField,
    opts: &SliceOptions,
) -> Result<Vec<Slice>, SlicingError> {
    let h = opts.layer_height;
    if !(h > 0.0 && h.is_finite()) {
        return Err(SlicingError::InvalidArgument(format!(
            "layer_height must be positive, got {h}"
        )));
    }
    if phi.len() != mesh.vertices.len() || stress.len() != mesh.vertices.len() {
        return Err(SlicingError::InvalidArgument(
            "field length does not match the mesh".into(),
        ));
    }
    let (grad, _) = build_tet_operators(mesh);
    let lo = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let base_only = h > hi;
    if base_only {
        log::warn!("layer height {h} exceeds the maximum distance {hi}; emitting the base slice only");
    }
    let nudge = 1e-7 * h;
    let mut levels = Vec::new();
    let mut k = 0usize;
    while (k as f64) * h <= hi + 1e-9 * h || k == 0 {
        levels.push(k);
        k += 1;
    }
    let slices: Vec<Option<Slice>> = levels
        .par_iter()
        .map(|&k| -> Result<Option<Slice>, SlicingError> {
            let iso = k as f64 * h;
            let c = iso.clamp(lo + nudge, (hi - nudge).max(lo + nudge));
            let Some((surface, origins)) = level_set(mesh, &grad, phi, c) else {
                return Ok(None);
            };
            let (surface, origins) = if opts.collapse_ratio > 0.0 {
                let min_len = opts.collapse_ratio * surface.mean_edge_length();
                collapse_short_edges(&surface, &origins, min_len)
            } else {
                (surface, origins)
            };
            if surface.total_area() < h * h && !base_only {
                log::debug!(
                    "layer {k} dropped: area {:.3e} below {:.3e}",
                    surface.total_area(),
                    h * h
                );
                return Ok(None);
            }
            let normals = vertex_normals(&surface)?;
            let tensors: Vec<SymTensor> = origins
                .iter()
                .map(|o| stress.interpolate(&mesh.tets[o.tet], &o.weights))
                .collect();
            let principal = tensors.iter().map(principal_of).collect();
            Ok(Some(Slice {
                layer: k,
                iso,
                surface,
                normals,
                tensors,
                principal,
                origins,
                critical: None,
            }))
        })
        .collect::<Result<_, _>>()?;
    Ok(slices.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::shapes;
    use std::f64::consts::PI;

    fn uniform_stress(n: usize) -> StressTensorField {
        StressTensorField {
            tensors: vec![SymTensor::diagonal([1.0, 0.0, 0.0]); n],
        }
    }

    #[test]
    fn cube_planar_layers() {
        let m = shapes::grid_box(Vec3::zeros(), Vec3::repeat(1.0), [4, 4, 4]);
        let phi: Vec<f64> = m.vertices.iter().map(|p| p.z).collect();
        let opts = SliceOptions {
            layer_height: 0.25,
            ..SliceOptions::default()
        };
        let s = extract_slices(&m, &phi, &uniform_stress(m.vertices.len()), &opts).unwrap();
        assert_eq!(s.len(), 5);
        for (k, sl) in s.iter().enumerate() {
            assert_eq!(sl.layer, k);
            assert_eq!(sl.iso, k as f64 * 0.25);
            assert!((sl.area() - 1.0).abs() < 1e-6, "layer {k} area {}", sl.area());
            for (p, n) in sl.surface.vertices.iter().zip(&sl.normals) {
                assert!((p.z - sl.iso).abs() < 1e-6);
                assert!((n - Vec3::z()).norm() < 1e-9);
            }
            for (o, p) in sl.origins.iter().zip(&sl.surface.vertices) {
                assert!((o.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let q: Vec3 = (0..4).map(|i| m.vertices[m.tets[o.tet][i]] * o.weights[i]).sum();
                assert!((q - p).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn off_grid_levels_and_sphere_sections() {
        let m = shapes::ball(1.0, 8);
        let phi: Vec<f64> = m.vertices.iter().map(|p| p.z + 1.0).collect();
        let opts = SliceOptions {
            layer_height: 0.3,
            ..SliceOptions::default()
        };
        let s = extract_slices(&m, &phi, &uniform_stress(m.vertices.len()), &opts).unwrap();
        // the mid-plane slice is close to a unit disk
        let mid = s.iter().find(|sl| (sl.iso - 0.9).abs() < 1e-12).unwrap();
        let r2 = 1.0 - 0.1f64.powi(2);
        assert!((mid.area() - PI * r2).abs() / (PI * r2) < 0.05);
    }

    #[test]
    fn layer_too_thick_gives_base_only() {
        let m = shapes::grid_box(Vec3::zeros(), Vec3::repeat(1.0), [2, 2, 2]);
        let phi: Vec<f64> = m.vertices.iter().map(|p| p.z).collect();
        let opts = SliceOptions {
            layer_height: 5.0,
            ..SliceOptions::default()
        };
        let s = extract_slices(&m, &phi, &uniform_stress(m.vertices.len()), &opts).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].iso, 0.0);
        let bad = SliceOptions {
            layer_height: 0.0,
            ..SliceOptions::default()
        };
        assert!(extract_slices(&m, &phi, &uniform_stress(m.vertices.len()), &bad).is_err());
    }
}
