use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::SlicingError;
use crate::meshcore::{build_tet_operators, TetMesh, Vec3};
use crate::numerics::{solve_spd, SolveOptions};

/// Heat-method settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatOptions {
    /// Diffusion time as a multiple of `h²` (`h` = mean edge length).
    pub time_factor: f64,
    /// Lower bound on `√t` as a fraction of the largest graph distance
    /// from the source. Keeps the far-field heat above round-off; see
    /// [`geodesic_heat`].
    pub min_reach: f64,
    pub solve: SolveOptions,
}

impl Default for HeatOptions {
    fn default() -> Self {
        Self {
            time_factor: 1.0,
            min_reach: 1.0 / 20.0,
            solve: SolveOptions::with_tol(1e-13),
        }
    }
}

/// Per-node geodesic distance (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceField {
    pub values: Vec<f64>,
    /// Diffusion time actually used.
    pub time: f64,
}

impl DistanceField {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Fraction of tets with `lo ≤ ‖∇φ‖ ≤ hi`.
    pub fn eikonal_fraction(&self, mesh: &TetMesh, lo: f64, hi: f64) -> f64 {
        let (grad, _) = build_tet_operators(mesh);
        let g = grad.apply(&mesh.tets, &self.values);
        let ok = g.iter().filter(|v| (lo..=hi).contains(&v.norm())).count();
        ok as f64 / g.len() as f64
    }
}

/// Shortest-path distance along mesh edges from the source nodes.
pub fn graph_distance(mesh: &TetMesh, source: &[usize]) -> Vec<f64> {
    let adj = mesh.vertex_adjacency();
    let mut dist = vec![f64::INFINITY; mesh.vertices.len()];
    let mut heap = BinaryHeap::new();
    for &s in source {
        dist[s] = 0.0;
        heap.push(Reverse((Ord64(0.0), s)));
    }
    while let Some(Reverse((Ord64(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &w in &adj[v] {
            let nd = d + (mesh.vertices[w] - mesh.vertices[v]).norm();
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((Ord64(nd), w)));
            }
        }
    }
    dist
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ord64(f64);

impl Eq for Ord64 {}

impl PartialOrd for Ord64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ord64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Geodesic distance from a set of boundary nodes.
///
/// 1. Diffuse heat from the source for time `t`: `(M + tL) u = u₀`, where
///    `u₀` is the surface delta of the source (each node's share of the
///    area of boundary faces lying wholly in the source; nodes on no such
///    face get the mean share).
/// 2. Normalize `X = −∇u/‖∇u‖` per tet.
/// 3. Fit `∇φ ≈ X` in least squares (`Lφ = ∫∇λ·X`) with `φ = 0` on the
///    source, then clamp round-off negatives to zero.
///
/// `t = time_factor·h²`, raised to `(min_reach·D)²` when the graph
/// distance `D` across the part is so large that the implicit heat step
/// (which decays like `exp(−d/√t)`) would sink below solver precision.
pub fn geodesic_heat(mesh: &TetMesh, source: &[usize], opts: &HeatOptions) -> Result<DistanceField, SlicingError> {
    let n = mesh.vertices.len();
    if source.is_empty() {
        return Err(SlicingError::InvalidSource("source set is empty".into()));
    }
    let on_boundary = mesh.boundary_nodes();
    let mut is_source = vec![false; n];
    for &s in source {
        if s >= n {
            return Err(SlicingError::InvalidSource(format!("node {s} out of range")));
        }
        if !on_boundary[s] {
            return Err(SlicingError::InvalidSource(format!("node {s} is not on the boundary")));
        }
        is_source[s] = true;
    }
    let graph = graph_distance(mesh, source);
    let unreachable: Vec<usize> = (0..n).filter(|&v| graph[v].is_infinite()).collect();
    if !unreachable.is_empty() {
        return Err(SlicingError::Unreachable {
            count: unreachable.len(),
            nodes: unreachable.into_iter().take(20).collect(),
        });
    }
    if !(opts.time_factor > 0.0) {
        return Err(SlicingError::InvalidArgument("time_factor must be positive".into()));
    }

    let (grad, ops) = build_tet_operators(mesh);
    let h = mesh.mean_edge_length();
    let reach = opts.min_reach * graph.iter().copied().fold(0.0, f64::max);
    let mut t = opts.time_factor * h * h;
    if reach * reach > t {
        log::info!(
            "heat time raised from {t:.3e} to {:.3e} for far-field precision",
            reach * reach
        );
        t = reach * reach;
    }

    let a = ops.mass_matrix().add_scaled(t, &ops.laplacian)?.into_symmetric()?;
    let u0 = source_weights(mesh, &is_source);
    let u = solve_spd(&a, &u0, &opts.solve)?;

    let gu = grad.apply(&mesh.tets, &u);
    let mut b = vec![0.0; n];
    for (ti, tet) in mesh.tets.iter().enumerate() {
        let norm = gu[ti].norm();
        if !(norm > f64::MIN_POSITIVE) {
            continue;
        }
        let x: Vec3 = -gu[ti] / norm;
        let vol = grad.volumes[ti];
        for k in 0..4 {
            b[tet[k]] += vol * grad.hat_gradients[ti][k].dot(&x);
        }
    }

    let free: Vec<usize> = (0..n).filter(|&v| !is_source[v]).collect();
    let mut phi = vec![0.0; n];
    if !free.is_empty() {
        let lff = ops.laplacian.principal_submatrix(&free);
        let bf: Vec<f64> = free.iter().map(|&v| b[v]).collect();
        let sol = solve_spd(&lff, &bf, &opts.solve)?;
        for (k, &v) in free.iter().enumerate() {
            phi[v] = sol[k].max(0.0);
        }
    }
    Ok(DistanceField { values: phi, time: t })
}

/// Surface-delta right-hand side of the heat step.
fn source_weights(mesh: &TetMesh, is_source: &[bool]) -> Vec<f64> {
    let mut w = vec![0.0; is_source.len()];
    for f in &mesh.boundary_faces {
        if f.iter().all(|&v| is_source[v]) {
            let [a, b, c] = f.map(|v| mesh.vertices[v]);
            let share = (b - a).cross(&(c - a)).norm() / 6.0;
            for &v in f {
                w[v] += share;
            }
        }
    }
    let covered: Vec<f64> = w.iter().copied().filter(|&x| x > 0.0).collect();
    let fill = if covered.is_empty() {
        1.0
    } else {
        covered.iter().sum::<f64>() / covered.len() as f64
    };
    for (x, &s) in w.iter_mut().zip(is_source) {
        if s && *x == 0.0 {
            *x = fill;
        }
    }
    w
}
