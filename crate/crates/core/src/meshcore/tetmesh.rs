use std::collections::{BTreeMap, HashMap};

use super::{edge_key, sorted3, MeshError, Vec3, DEGENERATE_VOLUME};

/// Outward-facing faces of a positively oriented tetrahedron, listed by
/// local vertex index. Face `k` is opposite local vertex `k`.
pub(crate) const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

pub(crate) const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Volumetric tetrahedral mesh. Every tet is stored with positive signed
/// volume; `boundary_faces` are wound outward.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TetMesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub boundary_faces: Vec<[usize; 3]>,
    /// Optional per-node boundary markers (TetGen convention).
    pub markers: Option<Vec<i32>>,
}

pub(crate) fn signed_volume(p: [Vec3; 4]) -> f64 {
    (p[1] - p[0]).dot(&(p[2] - p[0]).cross(&(p[3] - p[0]))) / 6.0
}

impl TetMesh {
    /// Validates indices, reorients negatively oriented tets by swapping
    /// their last two vertices, rejects degenerate tets and extracts the
    /// outward boundary.
    pub fn new(vertices: Vec<Vec3>, mut tets: Vec<[usize; 4]>) -> Result<Self, MeshError> {
        if vertices.is_empty() {
            return Err(MeshError::Empty("no vertices".into()));
        }
        if tets.is_empty() {
            return Err(MeshError::Empty("no tetrahedra".into()));
        }
        let n = vertices.len();
        for (ti, t) in tets.iter_mut().enumerate() {
            for &v in t.iter() {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange {
                        element: "tetrahedron",
                        element_index: ti,
                        index: v as i64,
                        count: n,
                    });
                }
            }
            let vol = signed_volume(t.map(|v| vertices[v]));
            if !(vol.abs() > DEGENERATE_VOLUME) {
                return Err(MeshError::DegenerateTet { tet: ti, volume: vol });
            }
            if vol < 0.0 {
                t.swap(2, 3);
            }
        }
        let boundary_faces = extract_boundary(&tets)?;
        Ok(Self {
            vertices,
            tets,
            boundary_faces,
            markers: None,
        })
    }

    pub fn with_markers(mut self, markers: Vec<i32>) -> Self {
        assert_eq!(markers.len(), self.vertices.len());
        self.markers = Some(markers);
        self
    }

    pub fn tet_points(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume(self.tet_points(t))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn tet_centroid(&self, t: usize) -> Vec3 {
        let p = self.tet_points(t);
        (p[0] + p[1] + p[2] + p[3]) / 4.0
    }

    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut on = vec![false; self.vertices.len()];
        for f in &self.boundary_faces {
            for &v in f {
                on[v] = true;
            }
        }
        on
    }

    pub fn boundary_area(&self) -> f64 {
        self.boundary_faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|v| self.vertices[v]);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    /// Undirected edges, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .tets
            .iter()
            .flat_map(|t| TET_EDGES.iter().map(move |&[a, b]| edge_key(t[a], t[b])))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn mean_edge_length(&self) -> f64 {
        let e = self.edges();
        e.iter()
            .map(|&(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .sum::<f64>()
            / e.len() as f64
    }

    pub fn vertex_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Tets incident to each node.
    pub fn node_tets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (ti, t) in self.tets.iter().enumerate() {
            for &v in t {
                out[v].push(ti);
            }
        }
        out
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Applies `f` to every vertex and rebuilds the mesh.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self, MeshError> {
        let verts = self.vertices.iter().map(f).collect();
        let mut m = Self::new(verts, self.tets.clone())?;
        m.markers = self.markers.clone();
        Ok(m)
    }
}

fn extract_boundary(tets: &[[usize; 4]]) -> Result<Vec<[usize; 3]>, MeshError> {
    let mut count: HashMap<[usize; 3], (usize, [usize; 3])> = HashMap::new();
    for t in tets {
        for lf in TET_FACES {
            let f = lf.map(|k| t[k]);
            let e = count.entry(sorted3(f)).or_insert((0, f));
            e.0 += 1;
        }
    }
    let mut faces: Vec<[usize; 3]> = count
        .into_iter()
        .filter_map(|(key, (c, f))| (c == 1).then_some((key, f)))
        .collect::<BTreeMap<_, _>>()
        .into_values()
        .collect();
    if faces.is_empty() {
        return Err(MeshError::OpenBoundary("no boundary faces".into()));
    }
    let mut edge_use: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for f in &faces {
        for k in 0..3 {
            *edge_use.entry(edge_key(f[k], f[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    if let Some((&(a, b), &c)) = edge_use.iter().find(|(_, &c)| c != 2) {
        return Err(MeshError::OpenBoundary(format!(
            "boundary edge ({a}, {b}) is shared by {c} boundary faces"
        )));
    }
    faces.shrink_to_fit();
    Ok(faces)
}
