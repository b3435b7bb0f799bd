use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{edge_key, MeshError, Vec3, DEGENERATE_AREA};

/// Triangle surface mesh. Lengths are millimetres.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// Optional per-vertex unit normals.
    pub normals: Option<Vec<Vec3>>,
}

impl TriMesh {
    /// Validates indices, face areas, edge manifoldness and winding
    /// consistency.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mesh = Self {
            vertices,
            faces,
            normals: None,
        };
        mesh.check_basic()?;
        mesh.check_winding()?;
        Ok(mesh)
    }

    /// Like [`TriMesh::new`], but flips faces as needed to make the winding
    /// consistent within each connected component.
    pub fn new_oriented(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mut mesh = Self {
            vertices,
            faces,
            normals: None,
        };
        mesh.check_basic()?;
        mesh.orient()?;
        Ok(mesh)
    }

    pub fn with_normals(mut self, normals: Vec<Vec3>) -> Self {
        assert_eq!(normals.len(), self.vertices.len());
        self.normals = Some(normals);
        self
    }

    fn check_basic(&self) -> Result<(), MeshError> {
        if self.faces.is_empty() {
            return Err(MeshError::Empty("triangle mesh has no faces".into()));
        }
        let n = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange {
                        element: "face",
                        element_index: fi,
                        index: v as i64,
                        count: n,
                    });
                }
            }
            let area = self.face_area(fi);
            if !(area > DEGENERATE_AREA) {
                return Err(MeshError::DegenerateFace { face: fi, area });
            }
        }
        for (&(a, b), faces) in &self.edge_faces() {
            if faces.len() > 2 {
                return Err(MeshError::NonManifoldEdge {
                    a,
                    b,
                    count: faces.len(),
                });
            }
        }
        Ok(())
    }

    fn check_winding(&self) -> Result<(), MeshError> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let e = (f[k], f[(k + 1) % 3]);
                let c = directed.entry(e).or_insert(0);
                *c += 1;
                if *c > 1 {
                    return Err(MeshError::InconsistentWinding { a: e.0, b: e.1 });
                }
            }
        }
        Ok(())
    }

    fn orient(&mut self) -> Result<(), MeshError> {
        let edge_faces = self.edge_faces();
        let nf = self.faces.len();
        let mut visited = vec![false; nf];
        for seed in 0..nf {
            if visited[seed] {
                continue;
            }
            visited[seed] = true;
            let mut queue = VecDeque::from([seed]);
            while let Some(f) = queue.pop_front() {
                let face = self.faces[f];
                for k in 0..3 {
                    let (a, b) = (face[k], face[(k + 1) % 3]);
                    for &g in &edge_faces[&edge_key(a, b)] {
                        if g == f {
                            continue;
                        }
                        let same_dir = (0..3).any(|m| self.faces[g][m] == a && self.faces[g][(m + 1) % 3] == b);
                        if visited[g] {
                            if same_dir {
                                return Err(MeshError::NonOrientable);
                            }
                            continue;
                        }
                        if same_dir {
                            self.faces[g].swap(1, 2);
                        }
                        visited[g] = true;
                        queue.push_back(g);
                    }
                }
            }
        }
        Ok(())
    }

    /// Undirected edge → incident faces, ordered by edge.
    pub fn edge_faces(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(f[k], f[(k + 1) % 3])).or_default().push(fi);
            }
        }
        map
    }

    pub fn face_points(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Non-normalized face normal, length = 2·area.
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_points(f);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_cross(f).norm()
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_cross(f).normalize()
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_points(f);
        (a + b + c) / 3.0
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let ef = self.edge_faces();
        if ef.is_empty() {
            return 0.0;
        }
        ef.keys()
            .map(|&(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .sum::<f64>()
            / ef.len() as f64
    }

    /// Sorted neighbour lists per vertex.
    pub fn vertex_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }

    /// Connected component id per vertex (isolated vertices get their own)
    /// and the component count.
    pub fn vertex_components(&self) -> (Vec<usize>, usize) {
        components(&self.vertex_adjacency(), |_| true)
    }

    /// Closed boundary loops, each oriented consistently with the face
    /// winding (the surface lies to the left when viewed along the normal).
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let mut next: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&(a, b), faces) in &self.edge_faces() {
            if faces.len() != 1 {
                continue;
            }
            let f = self.faces[faces[0]];
            let forward = (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b);
            let (s, t) = if forward { (a, b) } else { (b, a) };
            next.entry(s).or_default().push(t);
        }
        let mut loops = Vec::new();
        let mut used: BTreeMap<(usize, usize), bool> = BTreeMap::new();
        let starts: Vec<usize> = next.keys().copied().collect();
        for s in starts {
            while let Some(&t0) = next[&s].iter().find(|&&t| !used.contains_key(&(s, t))) {
                let mut lp = vec![s];
                used.insert((s, t0), true);
                let mut cur = t0;
                while cur != s {
                    lp.push(cur);
                    let Some(&nx) = next
                        .get(&cur)
                        .and_then(|v| v.iter().find(|&&t| !used.contains_key(&(cur, t))))
                    else {
                        break;
                    };
                    used.insert((cur, nx), true);
                    cur = nx;
                }
                if lp.len() >= 3 {
                    loops.push(lp);
                }
            }
        }
        loops
    }

    /// Vertices on the open boundary.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.vertices.len()];
        for (&(a, b), faces) in &self.edge_faces() {
            if faces.len() == 1 {
                on[a] = true;
                on[b] = true;
            }
        }
        on
    }

    /// Returns a copy with faces whose all vertices satisfy `keep` and the
    /// vertex map old → new.
    pub fn submesh(&self, keep_face: impl Fn(usize) -> bool) -> (TriMesh, Vec<Option<usize>>) {
        let mut map = vec![None; self.vertices.len()];
        let mut verts = Vec::new();
        let mut faces = Vec::new();
        for (fi, f) in self.faces.iter().enumerate() {
            if !keep_face(fi) {
                continue;
            }
            let mut nf = [0; 3];
            for k in 0..3 {
                let v = f[k];
                nf[k] = *map[v].get_or_insert_with(|| {
                    verts.push(self.vertices[v]);
                    verts.len() - 1
                });
            }
            faces.push(nf);
        }
        let normals = self.normals.as_ref().map(|ns| {
            let mut out = vec![Vec3::zeros(); verts.len()];
            for (old, m) in map.iter().enumerate() {
                if let Some(new) = m {
                    out[*new] = ns[old];
                }
            }
            out
        });
        (
            TriMesh {
                vertices: verts,
                faces,
                normals,
            },
            map,
        )
    }
}

/// Connected components over an adjacency list restricted to vertices
/// with `include(v)`; excluded vertices get `usize::MAX`.
pub(crate) fn components(adj: &[Vec<usize>], include: impl Fn(usize) -> bool) -> (Vec<usize>, usize) {
    let n = adj.len();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for s in 0..n {
        if comp[s] != usize::MAX || !include(s) {
            continue;
        }
        comp[s] = count;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if comp[w] == usize::MAX && include(w) {
                    comp[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> (Vec<Vec3>, Vec<[usize; 3]>) {
        (
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
    }

    #[test]
    fn valid_square() {
        let (v, f) = square();
        let m = TriMesh::new(v, f).unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        let loops = m.boundary_loops();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 4);
    }

    #[test]
    fn inconsistent_winding_detected_and_fixed() {
        let (v, _) = square();
        let f = vec![[0, 1, 2], [0, 3, 2]];
        assert!(matches!(
            TriMesh::new(v.clone(), f.clone()),
            Err(MeshError::InconsistentWinding { .. })
        ));
        let m = TriMesh::new_oriented(v, f).unwrap();
        assert!(m.face_normal(0).dot(&m.face_normal(1)) > 0.99);
    }

    #[test]
    fn degenerate_and_out_of_range() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        assert!(matches!(
            TriMesh::new(v.clone(), vec![[0, 1, 2]]),
            Err(MeshError::DegenerateFace { face: 0, .. })
        ));
        assert!(matches!(
            TriMesh::new(v, vec![[0, 1, 5]]),
            Err(MeshError::IndexOutOfRange { index: 5, .. })
        ));
    }

    #[test]
    fn non_manifold_edge() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z()];
        let f = vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        assert!(matches!(
            TriMesh::new_oriented(v, f),
            Err(MeshError::NonManifoldEdge { count: 3, .. })
        ));
    }

    #[test]
    fn components_split() {
        let v = vec![
            Vec3::zeros(),
            Vec3::x(),
            Vec3::y(),
            Vec3::new(5.0, 0.0, 0.0),
            Vec3::new(6.0, 0.0, 0.0),
            Vec3::new(5.0, 1.0, 0.0),
        ];
        let m = TriMesh::new(v, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        let (comp, n) = m.vertex_components();
        assert_eq!(n, 2);
        assert_eq!(comp[0], comp[2]);
        assert_ne!(comp[0], comp[3]);
    }
}
