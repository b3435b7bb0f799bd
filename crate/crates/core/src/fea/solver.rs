use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeaError, StressTensorField, SymTensor};
use crate::meshcore::{TetMesh, Vec3};
use crate::numerics::{solve_spd, SolveOptions, SparseMatrix};

/// Isotropic linear-elastic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Material {
    /// Young's modulus (N/mm²).
    pub young_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self {
            young_modulus: 1000.0,
            poisson_ratio: 0.3,
        }
    }
}

impl Material {
    pub fn validate(&self) -> Result<(), FeaError> {
        if !(self.young_modulus > 0.0 && self.young_modulus.is_finite()) {
            return Err(FeaError::InvalidMaterial(format!(
                "young_modulus must be positive, got {}",
                self.young_modulus
            )));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(FeaError::InvalidMaterial(format!(
                "poisson_ratio must lie in (-1, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        Ok(())
    }

    /// Lamé parameters for unit Young's modulus.
    fn unit_lame(&self) -> (f64, f64) {
        let nu = self.poisson_ratio;
        (nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), 0.5 / (1.0 + nu))
    }
}

/// Prescribed displacement of one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DofConstraint {
    pub node: usize,
    pub axis: usize,
    /// Displacement (mm).
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub constraints: Vec<DofConstraint>,
    /// Nodal forces (N).
    pub loads: Vec<(usize, Vec3)>,
}

impl BoundaryConditions {
    /// Clamps the selected axes of `node` to zero displacement.
    pub fn fix(&mut self, node: usize, axes: [bool; 3]) -> &mut Self {
        for (axis, &on) in axes.iter().enumerate() {
            if on {
                self.prescribe(node, axis, 0.0);
            }
        }
        self
    }

    pub fn prescribe(&mut self, node: usize, axis: usize, value: f64) -> &mut Self {
        self.constraints.push(DofConstraint { node, axis, value });
        self
    }

    pub fn load(&mut self, node: usize, force: Vec3) -> &mut Self {
        self.loads.push((node, force));
        self
    }

    /// Spreads `total` over the given boundary faces as the consistent
    /// nodal loads of a uniform traction (one third of each face's share
    /// to each corner).
    pub fn distribute_force(&mut self, mesh: &TetMesh, faces: &[usize], total: Vec3) -> Result<&mut Self, FeaError> {
        let areas: Vec<f64> = faces
            .iter()
            .map(|&f| {
                let [a, b, c] = mesh.boundary_faces[f].map(|v| mesh.vertices[v]);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .collect();
        let sum: f64 = areas.iter().sum();
        if !(sum > 0.0) {
            return Err(FeaError::InvalidBoundary("load region has zero area".into()));
        }
        let mut acc: BTreeMap<usize, Vec3> = BTreeMap::new();
        for (&f, &a) in faces.iter().zip(&areas) {
            for &v in &mesh.boundary_faces[f] {
                *acc.entry(v).or_insert_with(Vec3::zeros) += total * (a / sum / 3.0);
            }
        }
        self.loads.extend(acc);
        Ok(self)
    }

    fn validate(&self, mesh: &TetMesh) -> Result<BTreeMap<usize, f64>, FeaError> {
        let n = mesh.vertices.len();
        let mut fixed = BTreeMap::new();
        for c in &self.constraints {
            if c.node >= n || c.axis > 2 {
                return Err(FeaError::InvalidBoundary(format!(
                    "constraint on node {} axis {} out of range",
                    c.node, c.axis
                )));
            }
            if !c.value.is_finite() {
                return Err(FeaError::InvalidBoundary(format!(
                    "non-finite displacement at node {}",
                    c.node
                )));
            }
            let dof = 3 * c.node + c.axis;
            if let Some(prev) = fixed.insert(dof, c.value) {
                if prev != c.value {
                    return Err(FeaError::InvalidBoundary(format!(
                        "conflicting displacements on node {} axis {}",
                        c.node, c.axis
                    )));
                }
            }
        }
        for (node, f) in &self.loads {
            if *node >= n {
                return Err(FeaError::InvalidBoundary(format!("load on missing node {node}")));
            }
            if !f.iter().all(|c| c.is_finite()) {
                return Err(FeaError::InvalidBoundary(format!("non-finite load on node {node}")));
            }
        }
        check_rigid_modes(mesh, &fixed)?;
        Ok(fixed)
    }
}

/// Fails unless the constrained DOFs suppress all six rigid-body modes.
fn check_rigid_modes(mesh: &TetMesh, fixed: &BTreeMap<usize, f64>) -> Result<(), FeaError> {
    let (lo, hi) = mesh.bounding_box();
    let c = (lo + hi) * 0.5;
    let size = (hi - lo).norm().max(f64::MIN_POSITIVE);
    let mut gram = nalgebra::Matrix6::<f64>::zeros();
    for &dof in fixed.keys() {
        let (node, axis) = (dof / 3, dof % 3);
        let x = (mesh.vertices[node] - c) / size;
        let mut row = nalgebra::Vector6::<f64>::zeros();
        row[axis] = 1.0;
        for r in 0..3 {
            // axis component of e_r × x
            row[3 + r] = Vec3::ith(r, 1.0).cross(&x)[axis];
        }
        gram += row * row.transpose();
    }
    let eig = gram.symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 1e-10) {
        return Err(FeaError::InvalidBoundary(format!(
            "constraints leave rigid-body motion free ({} constrained dofs)",
            fixed.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaSolution {
    /// Nodal displacements (mm).
    pub displacements: Vec<Vec3>,
    /// Volume-weighted nodal averages of the element stresses.
    pub stress: StressTensorField,
    /// Constant stress per tet.
    pub element_stress: Vec<SymTensor>,
    /// Sum of reaction forces at the constrained DOFs.
    pub reaction_sum: Vec3,
    /// Sum of applied loads.
    pub load_sum: Vec3,
}

impl FeaSolution {
    /// `‖R + F‖ / ‖F‖`, or `‖R‖` when no load is applied.
    pub fn equilibrium_error(&self) -> f64 {
        let r = (self.reaction_sum + self.load_sum).norm();
        let f = self.load_sum.norm();
        if f > 0.0 {
            r / f
        } else {
            r
        }
    }
}

/// Solves linear elasticity with tet4 elements.
///
/// The system is assembled with unit Young's modulus and solved for
/// `E·u`, so under pure force loading the stresses do not depend on `E`
/// at all (not even through rounding).
pub fn solve_elasticity(
    mesh: &TetMesh,
    mat: &Material,
    bc: &BoundaryConditions,
    opts: &SolveOptions,
) -> Result<FeaSolution, FeaError> {
    mat.validate()?;
    let fixed = bc.validate(mesh)?;
    let n = mesh.vertices.len();
    let ndof = 3 * n;
    let (lambda, mu) = mat.unit_lame();
    let e = mat.young_modulus;

    let geo: Vec<([Vec3; 4], f64)> = (0..mesh.tets.len())
        .into_par_iter()
        .map(|t| crate::meshcore::tet_hat_gradients(mesh.tet_points(t)))
        .collect();

    // DOF numbering: free DOFs first, in order.
    let mut free_index = vec![usize::MAX; ndof];
    let mut nfree = 0;
    for (dof, slot) in free_index.iter_mut().enumerate() {
        if !fixed.contains_key(&dof) {
            *slot = nfree;
            nfree += 1;
        }
    }
    // scaled prescribed values w = E·u
    let mut w = vec![0.0; ndof];
    for (&dof, &val) in &fixed {
        w[dof] = e * val;
    }
    let mut f = vec![0.0; ndof];
    for (node, force) in &bc.loads {
        for a in 0..3 {
            f[3 * node + a] += force[a];
        }
    }

    let element_blocks: Vec<[f64; 144]> = geo
        .par_iter()
        .map(|(g, vol)| element_stiffness(g, *vol, lambda, mu))
        .collect();

    let mut trip = Vec::with_capacity(mesh.tets.len() * 144);
    let mut rhs: Vec<f64> = (0..ndof)
        .filter(|d| free_index[*d] != usize::MAX)
        .map(|d| f[d])
        .collect();
    for (t, tet) in mesh.tets.iter().enumerate() {
        let ke = &element_blocks[t];
        for a in 0..4 {
            for i in 0..3 {
                let r = 3 * tet[a] + i;
                let fr = free_index[r];
                if fr == usize::MAX {
                    continue;
                }
                for b in 0..4 {
                    for j in 0..3 {
                        let c = 3 * tet[b] + j;
                        let k = ke[(3 * a + i) * 12 + 3 * b + j];
                        let fc = free_index[c];
                        if fc == usize::MAX {
                            rhs[fr] -= k * w[c];
                        } else {
                            trip.push((fr, fc, k));
                        }
                    }
                }
            }
        }
    }
    let k_ff = SparseMatrix::from_triplets(nfree, nfree, &trip)?.into_symmetric()?;
    drop(trip);
    let sol = if rhs.iter().all(|&v| v == 0.0) {
        vec![0.0; nfree]
    } else {
        solve_spd(&k_ff, &rhs, opts)?
    };
    for dof in 0..ndof {
        if free_index[dof] != usize::MAX {
            w[dof] = sol[free_index[dof]];
        }
    }

    // element stresses σ = D̂ ε(w) and internal forces for reactions
    let element_stress: Vec<SymTensor> = mesh
        .tets
        .par_iter()
        .zip(&geo)
        .map(|(tet, (g, _))| {
            let mut grad = nalgebra::Matrix3::<f64>::zeros();
            for a in 0..4 {
                let wa = Vec3::new(w[3 * tet[a]], w[3 * tet[a] + 1], w[3 * tet[a] + 2]);
                grad += wa * g[a].transpose();
            }
            let eps = (grad + grad.transpose()) * 0.5;
            let sigma = nalgebra::Matrix3::identity() * (lambda * eps.trace()) + eps * (2.0 * mu);
            SymTensor::from_matrix(&sigma)
        })
        .collect();

    let mut internal = vec![0.0; ndof];
    for (t, tet) in mesh.tets.iter().enumerate() {
        let (g, vol) = &geo[t];
        let s = element_stress[t].to_matrix();
        for a in 0..4 {
            let fa = s * g[a] * *vol;
            for i in 0..3 {
                internal[3 * tet[a] + i] += fa[i];
            }
        }
    }
    let mut reaction_sum = Vec3::zeros();
    for &dof in fixed.keys() {
        reaction_sum[dof % 3] += internal[dof] - f[dof];
    }
    let load_sum = bc.loads.iter().fold(Vec3::zeros(), |acc, (_, v)| acc + v);

    let mut acc = vec![SymTensor::default(); n];
    let mut wsum = vec![0.0; n];
    for (t, tet) in mesh.tets.iter().enumerate() {
        let vol = geo[t].1;
        for &v in tet {
            for k in 0..6 {
                acc[v].0[k] += vol * element_stress[t].0[k];
            }
            wsum[v] += vol;
        }
    }
    let tensors = acc
        .into_iter()
        .zip(&wsum)
        .map(|(s, &ws)| if ws > 0.0 { s.scaled(1.0 / ws) } else { s })
        .collect();
    let displacements = (0..n)
        .map(|v| Vec3::new(w[3 * v], w[3 * v + 1], w[3 * v + 2]) / e)
        .collect();

    let sol = FeaSolution {
        displacements,
        stress: StressTensorField { tensors },
        element_stress,
        reaction_sum,
        load_sum,
    };
    let err = sol.equilibrium_error();
    if err > 1e-6 {
        log::warn!("FEA equilibrium error {err:.3e} exceeds 1e-6");
    }
    Ok(sol)
}

/// 12×12 element stiffness (row-major, DOF order node-major) for unit `E`.
fn element_stiffness(g: &[Vec3; 4], vol: f64, lambda: f64, mu: f64) -> [f64; 144] {
    let mut k = [0.0; 144];
    for a in 0..4 {
        for b in 0..4 {
            let gg = g[a].dot(&g[b]);
            for i in 0..3 {
                for j in 0..3 {
                    let mut v = lambda * g[a][i] * g[b][j] + mu * g[a][j] * g[b][i];
                    if i == j {
                        v += mu * gg;
                    }
                    k[(3 * a + i) * 12 + 3 * b + j] = vol * v;
                }
            }
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::{shapes, Selector};

    fn bar(dims: [usize; 3]) -> TetMesh {
        shapes::grid_box(Vec3::zeros(), Vec3::new(10.0, 1.0, 1.0), dims)
    }

    /// Roller supports on x = 0 plus enough extra DOFs to stop rigid motion
    /// without restraining lateral contraction.
    fn roller_bc(m: &TetMesh) -> BoundaryConditions {
        let mut bc = BoundaryConditions::default();
        for v in (Selector::Extreme { axis: 0, max: false }).nodes(m) {
            bc.fix(v, [true, false, false]);
        }
        let origin = m.vertices.iter().position(|p| p.norm() < 1e-12).unwrap();
        let y1 = m
            .vertices
            .iter()
            .position(|p| (p - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12)
            .unwrap();
        bc.fix(origin, [true, true, true]);
        bc.fix(y1, [false, false, true]);
        let z1 = m
            .vertices
            .iter()
            .position(|p| (p - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12)
            .unwrap();
        bc.fix(z1, [false, true, false]);
        bc
    }

    #[test]
    fn uniaxial_patch() {
        let m = bar([10, 2, 2]);
        let mut bc = roller_bc(&m);
        let faces = Selector::Extreme { axis: 0, max: true }.faces(&m);
        bc.distribute_force(&m, &faces, Vec3::new(100.0, 0.0, 0.0)).unwrap();
        let sol = solve_elasticity(&m, &Material::default(), &bc, &SolveOptions::default()).unwrap();
        for s in &sol.stress.tensors {
            assert!((s.0[0] - 100.0).abs() < 1e-6 * 100.0, "{s:?}");
            for k in 1..6 {
                assert!(s.0[k].abs() < 1e-6);
            }
        }
        assert!(sol.equilibrium_error() < 1e-6);
    }

    #[test]
    fn zero_load_zero_response() {
        let m = bar([4, 1, 1]);
        let bc = roller_bc(&m);
        let sol = solve_elasticity(&m, &Material::default(), &bc, &SolveOptions::default()).unwrap();
        assert!(sol.displacements.iter().all(|u| *u == Vec3::zeros()));
        assert!(sol.stress.tensors.iter().all(|s| *s == SymTensor::default()));
    }

    #[test]
    fn rigid_modes_detected() {
        let m = bar([4, 1, 1]);
        let mut bc = BoundaryConditions::default();
        for v in (Selector::Extreme { axis: 0, max: false }).nodes(&m) {
            bc.fix(v, [true, false, false]);
        }
        let err = solve_elasticity(&m, &Material::default(), &bc, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, FeaError::InvalidBoundary(_)));
    }

    #[test]
    fn material_validation() {
        let bad = Material {
            poisson_ratio: 0.5,
            ..Material::default()
        };
        assert!(bad.validate().is_err());
        let bad = Material {
            young_modulus: 0.0,
            ..Material::default()
        };
        assert!(bad.validate().is_err());
    }
}
