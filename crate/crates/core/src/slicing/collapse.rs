use std::collections::BTreeSet;

use super::VertexOrigin;
use crate::meshcore::{edge_key, TriMesh, Vec3, DEGENERATE_AREA};

/// Collapses edges shorter than `min_len`, keeping one endpoint in place.
///
/// An edge `(a, b)` is collapsed onto `a` only if the link condition holds,
/// no surviving face flips or degenerates, and boundary vertices stay on
/// the boundary. Vertex data (`origins`) of the kept endpoint is retained,
/// so every vertex still lies exactly where its origin says.
pub fn collapse_short_edges(mesh: &TriMesh, origins: &[VertexOrigin], min_len: f64) -> (TriMesh, Vec<VertexOrigin>) {
    let nv = mesh.vertices.len();
    let mut faces: Vec<Option<[usize; 3]>> = mesh.faces.iter().map(|&f| Some(f)).collect();
    let mut vf: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nv];
    for (i, f) in mesh.faces.iter().enumerate() {
        for &v in f {
            vf[v].insert(i);
        }
    }
    let on_boundary = mesh.boundary_vertices();
    let boundary_edges: BTreeSet<(usize, usize)> = mesh
        .edge_faces()
        .into_iter()
        .filter(|(_, fs)| fs.len() == 1)
        .map(|(e, _)| e)
        .collect();
    let mut alive = vec![true; nv];
    let mut collapsed = 0usize;
    let mut edges: Vec<(f64, usize, usize)> = mesh
        .edge_faces()
        .keys()
        .map(|&(a, b)| ((mesh.vertices[a] - mesh.vertices[b]).norm(), a, b))
        .filter(|e| e.0 < min_len)
        .collect();
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));

    let neighbors = |v: usize, vf: &[BTreeSet<usize>], faces: &[Option<[usize; 3]>]| -> BTreeSet<usize> {
        vf[v]
            .iter()
            .flat_map(|&f| faces[f].unwrap())
            .filter(|&w| w != v)
            .collect()
    };

    for (_, a0, b0) in edges {
        if !alive[a0] || !alive[b0] {
            continue;
        }
        let shared: Vec<usize> = vf[a0].intersection(&vf[b0]).copied().collect();
        if shared.is_empty() {
            continue;
        }
        // keep the boundary endpoint
        let (keep, gone) = match (on_boundary[a0], on_boundary[b0]) {
            (false, true) => (b0, a0),
            (true, true) if !boundary_edges.contains(&edge_key(a0, b0)) => continue,
            _ => (a0, b0),
        };
        if (mesh.vertices[keep] - mesh.vertices[gone]).norm() >= min_len {
            continue;
        }
        let common: BTreeSet<usize> = neighbors(keep, &vf, &faces)
            .intersection(&neighbors(gone, &vf, &faces))
            .copied()
            .collect();
        if common.len() != shared.len() {
            continue;
        }
        let ok = vf[gone].iter().filter(|f| !shared.contains(f)).all(|&f| {
            let old = faces[f].unwrap();
            let new = old.map(|v| if v == gone { keep } else { v });
            let n_old = face_cross(mesh, old);
            let n_new = face_cross(mesh, new);
            0.5 * n_new.norm() > DEGENERATE_AREA && n_new.dot(&n_old) > 0.0
        });
        if !ok {
            continue;
        }
        for &f in &shared {
            for v in faces[f].unwrap() {
                vf[v].remove(&f);
            }
            faces[f] = None;
        }
        let moved: Vec<usize> = vf[gone].iter().copied().collect();
        for f in moved {
            let nf = faces[f].unwrap().map(|v| if v == gone { keep } else { v });
            faces[f] = Some(nf);
            vf[keep].insert(f);
        }
        vf[gone].clear();
        alive[gone] = false;
        collapsed += 1;
    }
    if collapsed == 0 {
        return (mesh.clone(), origins.to_vec());
    }

    let mut remap = vec![usize::MAX; nv];
    let mut verts = Vec::new();
    let mut orig = Vec::new();
    let mut out_faces = Vec::new();
    for f in faces.into_iter().flatten() {
        out_faces.push(f.map(|v| {
            if remap[v] == usize::MAX {
                remap[v] = verts.len();
                verts.push(mesh.vertices[v]);
                orig.push(origins[v]);
            }
            remap[v]
        }));
    }
    match TriMesh::new(verts, out_faces) {
        Ok(m) => (m, orig),
        Err(e) => {
            log::warn!("edge collapse produced an invalid surface ({e}); keeping the original");
            (mesh.clone(), origins.to_vec())
        }
    }
}

fn face_cross(mesh: &TriMesh, f: [usize; 3]) -> Vec3 {
    let [a, b, c] = f.map(|v| mesh.vertices[v]);
    (b - a).cross(&(c - a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::shapes;

    #[test]
    fn collapses_short_interior_edge() {
        let mut m = shapes::planar_grid(1.0, 1.0, 4, 4);
        // squeeze one interior vertex toward its neighbour
        let target = m
            .vertices
            .iter()
            .position(|p| (p - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-12)
            .unwrap();
        m.vertices[target].x = 0.26;
        let origins = vec![
            VertexOrigin {
                tet: 0,
                weights: [1.0, 0.0, 0.0, 0.0]
            };
            m.vertices.len()
        ];
        let (c, o) = collapse_short_edges(&m, &origins, 0.05);
        assert_eq!(c.vertices.len(), m.vertices.len() - 1);
        assert_eq!(o.len(), c.vertices.len());
        assert!((c.total_area() - 1.0).abs() < 1e-12);
        assert_eq!(c.boundary_loops().len(), 1);
    }

    #[test]
    fn nothing_to_collapse() {
        let m = shapes::planar_grid(1.0, 1.0, 3, 3);
        let origins = vec![
            VertexOrigin {
                tet: 0,
                weights: [1.0, 0.0, 0.0, 0.0]
            };
            m.vertices.len()
        ];
        let (c, _) = collapse_short_edges(&m, &origins, 0.01);
        assert_eq!(c, m);
    }
}
