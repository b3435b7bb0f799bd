use rayon::prelude::*;

use super::{MeshError, TetMesh, TriMesh, Vec3, DEGENERATE_AREA};
use crate::numerics::SparseMatrix;

/// Per-face gradient of piecewise-linear vertex functions.
///
/// `matrix` has `3·faces` rows (row `3f + d` is component `d` of the
/// gradient on face `f`) and one column per vertex.
#[derive(Debug, Clone)]
pub struct FaceGradientOperator {
    pub matrix: SparseMatrix,
    /// Gradients of the three hat functions of each face.
    pub hat_gradients: Vec<[Vec3; 3]>,
    pub areas: Vec<f64>,
}

impl FaceGradientOperator {
    /// Uses differences against the first corner, so constants map to
    /// exactly zero.
    pub fn apply(&self, faces: &[[usize; 3]], values: &[f64]) -> Vec<Vec3> {
        faces
            .iter()
            .zip(&self.hat_gradients)
            .map(|(f, g)| {
                let v0 = values[f[0]];
                g[1] * (values[f[1]] - v0) + g[2] * (values[f[2]] - v0)
            })
            .collect()
    }
}

/// Per-tet gradients of the four barycentric coordinates.
#[derive(Debug, Clone)]
pub struct TetGradientOperator {
    pub hat_gradients: Vec<[Vec3; 4]>,
    pub volumes: Vec<f64>,
}

impl TetGradientOperator {
    /// Uses differences against the first corner, so constants map to
    /// exactly zero.
    pub fn apply(&self, tets: &[[usize; 4]], values: &[f64]) -> Vec<Vec3> {
        tets.iter()
            .zip(&self.hat_gradients)
            .map(|(t, g)| {
                let v0 = values[t[0]];
                (1..4).map(|k| g[k] * (values[t[k]] - v0)).sum()
            })
            .collect()
    }
}

/// Stiffness-form Laplacian (positive semi-definite) and lumped mass.
#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    pub laplacian: SparseMatrix,
    /// Diagonal of the lumped mass matrix (mm² on surfaces, mm³ on volumes).
    pub mass: Vec<f64>,
}

impl DiscreteOperators {
    pub fn mass_matrix(&self) -> SparseMatrix {
        SparseMatrix::diagonal(&self.mass)
    }
}

/// Gradient operator, cotangent Laplacian and lumped mass of a surface.
pub fn build_operators(mesh: &TriMesh) -> Result<(FaceGradientOperator, DiscreteOperators), MeshError> {
    let nf = mesh.faces.len();
    let nv = mesh.vertices.len();
    let mut hats = Vec::with_capacity(nf);
    let mut areas = Vec::with_capacity(nf);
    for fi in 0..nf {
        let [p0, p1, p2] = mesh.face_points(fi);
        let cross = (p1 - p0).cross(&(p2 - p0));
        let twice_area = cross.norm();
        if !(0.5 * twice_area > DEGENERATE_AREA) {
            return Err(MeshError::DegenerateFace {
                face: fi,
                area: 0.5 * twice_area,
            });
        }
        let n = cross / twice_area;
        // ∇λ_i = n × (opposite edge, counter-clockwise) / 2A; the three
        // sum to zero
        let g1 = n.cross(&(p0 - p2)) / twice_area;
        let g2 = n.cross(&(p1 - p0)) / twice_area;
        hats.push([-(g1 + g2), g1, g2]);
        areas.push(0.5 * twice_area);
    }

    let mut g_trip = Vec::with_capacity(9 * nf);
    let mut l_trip = Vec::with_capacity(9 * nf);
    let mut mass = vec![0.0; nv];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let g = &hats[fi];
        for k in 0..3 {
            for d in 0..3 {
                g_trip.push((3 * fi + d, f[k], g[k][d]));
            }
            for m in 0..3 {
                l_trip.push((f[k], f[m], areas[fi] * g[k].dot(&g[m])));
            }
            mass[f[k]] += areas[fi] / 3.0;
        }
    }
    if let Some(v) = mass.iter().position(|&m| m <= 0.0) {
        return Err(MeshError::IsolatedVertex(v));
    }
    let matrix = SparseMatrix::from_triplets(3 * nf, nv, &g_trip).expect("gradient entries are finite");
    let laplacian = SparseMatrix::from_triplets(nv, nv, &l_trip)
        .and_then(SparseMatrix::into_symmetric)
        .expect("cotangent laplacian is symmetric");
    Ok((
        FaceGradientOperator {
            matrix,
            hat_gradients: hats,
            areas,
        },
        DiscreteOperators { laplacian, mass },
    ))
}

/// Linear-FEM Laplacian and lumped mass over a tetrahedral mesh, with the
/// per-tet gradient operator.
pub fn build_tet_operators(mesh: &TetMesh) -> (TetGradientOperator, DiscreteOperators) {
    let per_tet: Vec<([Vec3; 4], f64)> = (0..mesh.tets.len())
        .into_par_iter()
        .map(|t| tet_hat_gradients(mesh.tet_points(t)))
        .collect();
    let nv = mesh.vertices.len();
    let mut trip = Vec::with_capacity(16 * mesh.tets.len());
    let mut mass = vec![0.0; nv];
    for (t, (g, vol)) in mesh.tets.iter().zip(&per_tet) {
        for a in 0..4 {
            for b in 0..4 {
                trip.push((t[a], t[b], vol * g[a].dot(&g[b])));
            }
            mass[t[a]] += vol / 4.0;
        }
    }
    let laplacian = SparseMatrix::from_triplets(nv, nv, &trip)
        .and_then(SparseMatrix::into_symmetric)
        .expect("FEM laplacian is symmetric");
    let (hat_gradients, volumes) = per_tet.into_iter().unzip();
    (
        TetGradientOperator { hat_gradients, volumes },
        DiscreteOperators { laplacian, mass },
    )
}

/// Gradients of the barycentric coordinates of a tet and its volume.
pub(crate) fn tet_hat_gradients(p: [Vec3; 4]) -> ([Vec3; 4], f64) {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let e3 = p[3] - p[0];
    let det = e1.dot(&e2.cross(&e3));
    // rows of the inverse edge matrix
    let g1 = e2.cross(&e3) / det;
    let g2 = e3.cross(&e1) / det;
    let g3 = e1.cross(&e2) / det;
    ([-(g1 + g2 + g3), g1, g2, g3], det / 6.0)
}

/// Angle-weighted vertex normals.
pub fn vertex_normals(mesh: &TriMesh) -> Result<Vec<Vec3>, MeshError> {
    let mut acc = vec![Vec3::zeros(); mesh.vertices.len()];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let n = mesh.face_normal(fi);
        let p = mesh.face_points(fi);
        for k in 0..3 {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            let angle = a.angle(&b);
            acc[f[k]] += n * angle;
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(v, n)| {
            let len = n.norm();
            if len > 0.0 {
                Ok(n / len)
            } else {
                Err(MeshError::IsolatedVertex(v))
            }
        })
        .collect()
}
