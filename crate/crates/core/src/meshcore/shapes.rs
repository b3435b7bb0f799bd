//! Synthetic desk-scale geometries: structured tetrahedral solids (boxes,
//! L-shapes, bent brackets, balls) and simple triangulated surfaces.

use std::f64::consts::{FRAC_PI_2, PI};

use super::{TetMesh, TriMesh, Vec3};

/// Kuhn subdivision of the unit cube into six tets sharing the main
/// diagonal. Corners are indexed by `x + 2y + 4z`.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Structured grid of `dims` cells over `[0,1]³` parameter space, keeping
/// the cells for which `keep(i, j, k)` holds. Returns tets over compacted
/// nodes with their parameter coordinates in `[0,1]³`.
fn grid_cells(dims: [usize; 3], keep: impl Fn(usize, usize, usize) -> bool) -> (Vec<Vec3>, Vec<[usize; 4]>) {
    let [nx, ny, nz] = dims;
    let node_id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut map = vec![usize::MAX; (nx + 1) * (ny + 1) * (nz + 1)];
    let mut nodes = Vec::new();
    let mut tets = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if !keep(i, j, k) {
                    continue;
                }
                let corner = |c: usize| {
                    let (di, dj, dk) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
                    (i + di, j + dj, k + dk)
                };
                let mut ids = [0usize; 8];
                for (c, id) in ids.iter_mut().enumerate() {
                    let (a, b, d) = corner(c);
                    let g = node_id(a, b, d);
                    if map[g] == usize::MAX {
                        map[g] = nodes.len();
                        nodes.push(Vec3::new(
                            a as f64 / nx as f64,
                            b as f64 / ny as f64,
                            d as f64 / nz as f64,
                        ));
                    }
                    *id = map[g];
                }
                for t in KUHN {
                    tets.push(t.map(|c| ids[c]));
                }
            }
        }
    }
    (nodes, tets)
}

/// Axis-aligned box split into `dims` cubes of six tets each.
pub fn grid_box(min: Vec3, max: Vec3, dims: [usize; 3]) -> TetMesh {
    let (nodes, tets) = grid_cells(dims, |_, _, _| true);
    let size = max - min;
    let verts = nodes.iter().map(|p| min + p.component_mul(&size)).collect();
    TetMesh::new(verts, tets).expect("structured box is valid")
}

/// L-shaped solid: a `[0,a]×[0,w]×[0,t]` foot plus a `[0,t]×[0,w]×[0,a]`
/// upright sharing the corner block, meshed with cells of edge ≈ `h`.
pub fn l_shape(a: f64, w: f64, t: f64, h: f64) -> TetMesh {
    let n_a = (a / h).round().max(1.0) as usize;
    let n_w = (w / h).round().max(1.0) as usize;
    let n_t = ((t / a) * n_a as f64).round().max(1.0) as usize;
    let (nodes, tets) = grid_cells([n_a, n_w, n_a], |i, _, k| i < n_t || k < n_t);
    let verts = nodes.iter().map(|p| Vec3::new(p.x * a, p.y * w, p.z * a)).collect();
    TetMesh::new(verts, tets).expect("L-shape is valid")
}

/// Dimensions of the synthetic curved bracket: a horizontal arm along +x,
/// a quarter-circle bend and a vertical arm along +z, with rectangular
/// cross-section. The outer (convex) surface is the print base.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BracketParams {
    pub arm_length: f64,
    pub outer_radius: f64,
    pub upright_length: f64,
    pub thickness: f64,
    pub width: f64,
    /// Target element edge length.
    pub cell: f64,
    /// Cells through the thickness (0 = derive from `cell`).
    pub thickness_cells: usize,
}

impl Default for BracketParams {
    fn default() -> Self {
        Self {
            arm_length: 30.0,
            outer_radius: 10.0,
            upright_length: 15.0,
            thickness: 4.0,
            width: 8.0,
            cell: 1.0,
            thickness_cells: 0,
        }
    }
}

/// Node markers written by [`bracket`].
pub mod bracket_marker {
    pub const BASE: i32 = 1;
    pub const INNER: i32 = 2;
    pub const FIXED_END: i32 = 3;
    pub const LOADED_END: i32 = 4;
    pub const SIDE: i32 = 5;
}

/// Curved bracket tet mesh with node markers (see [`bracket_marker`]).
pub fn bracket(p: &BracketParams) -> TetMesh {
    let arc = FRAC_PI_2 * p.outer_radius;
    let total = p.arm_length + arc + p.upright_length;
    let ns = (total / p.cell).round().max(3.0) as usize;
    let nw = (p.width / p.cell).round().max(1.0) as usize;
    let nt = if p.thickness_cells > 0 {
        p.thickness_cells
    } else {
        (p.thickness / p.cell).round().max(1.0) as usize
    };
    let (nodes, tets) = grid_cells([ns, nw, nt], |_, _, _| true);
    // outer-surface curve in the xz-plane and its inward normal
    let curve = |s: f64| -> (f64, f64, f64, f64) {
        if s <= p.arm_length {
            (s, 0.0, 0.0, 1.0)
        } else if s <= p.arm_length + arc {
            let th = (s - p.arm_length) / p.outer_radius;
            (
                p.arm_length + p.outer_radius * th.sin(),
                p.outer_radius * (1.0 - th.cos()),
                -th.sin(),
                th.cos(),
            )
        } else {
            let u = s - p.arm_length - arc;
            (p.arm_length + p.outer_radius, p.outer_radius + u, -1.0, 0.0)
        }
    };
    let mut markers = Vec::with_capacity(nodes.len());
    let verts = nodes
        .iter()
        .map(|q| {
            let s = q.x * total;
            let w = q.y * p.width;
            let t = q.z * p.thickness;
            let (cx, cz, nx, nz) = curve(s);
            let eps = 1e-12;
            let m = if q.z < eps {
                bracket_marker::BASE
            } else if q.x < eps {
                bracket_marker::FIXED_END
            } else if q.x > 1.0 - eps {
                bracket_marker::LOADED_END
            } else if q.z > 1.0 - eps {
                bracket_marker::INNER
            } else if q.y < eps || q.y > 1.0 - eps {
                bracket_marker::SIDE
            } else {
                0
            };
            markers.push(m);
            Vec3::new(cx + t * nx, w, cz + t * nz)
        })
        .collect();
    TetMesh::new(verts, tets)
        .expect("bracket is valid")
        .with_markers(markers)
}

/// Ball of radius `r` from a cube grid mapped onto the sphere
/// (`n` cells per cube edge, centred at the origin).
pub fn ball(r: f64, n: usize) -> TetMesh {
    let (nodes, tets) = grid_cells([n, n, n], |_, _, _| true);
    let verts = nodes
        .iter()
        .map(|p| {
            let c = p * 2.0 - Vec3::repeat(1.0);
            let (x2, y2, z2) = (c.x * c.x, c.y * c.y, c.z * c.z);
            r * Vec3::new(
                c.x * (1.0 - y2 / 2.0 - z2 / 2.0 + y2 * z2 / 3.0).sqrt(),
                c.y * (1.0 - z2 / 2.0 - x2 / 2.0 + z2 * x2 / 3.0).sqrt(),
                c.z * (1.0 - x2 / 2.0 - y2 / 2.0 + x2 * y2 / 3.0).sqrt(),
            )
        })
        .collect();
    TetMesh::new(verts, tets).expect("ball is valid")
}

/// Single regular tetrahedron with the given edge length.
pub fn regular_tetrahedron(edge: f64) -> TetMesh {
    let s = edge / (2.0 * 2f64.sqrt());
    let v = vec![
        Vec3::new(1.0, 1.0, 1.0) * s,
        Vec3::new(1.0, -1.0, -1.0) * s,
        Vec3::new(-1.0, 1.0, -1.0) * s,
        Vec3::new(-1.0, -1.0, 1.0) * s,
    ];
    TetMesh::new(v, vec![[0, 1, 2, 3]]).expect("regular tet is valid")
}

fn quad_grid(nu: usize, nv: usize, point: impl Fn(f64, f64) -> Vec3) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut verts = Vec::with_capacity((nu + 1) * (nv + 1));
    for j in 0..=nv {
        for i in 0..=nu {
            verts.push(point(i as f64 / nu as f64, j as f64 / nv as f64));
        }
    }
    let id = |i: usize, j: usize| i + (nu + 1) * j;
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (verts, faces)
}

/// `[0,w]×[0,h]` rectangle in the xy-plane, normal +z.
pub fn planar_grid(w: f64, h: f64, nx: usize, ny: usize) -> TriMesh {
    let (v, f) = quad_grid(nx, ny, |u, s| Vec3::new(u * w, s * h, 0.0));
    TriMesh::new(v, f).expect("planar grid is valid")
}

/// Annulus (or disk with `r_inner = 0`) in the xy-plane, normal +z.
pub fn annulus(r_inner: f64, r_outer: f64, rings: usize, sectors: usize) -> TriMesh {
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    let start_ring = if r_inner > 0.0 { 0 } else { 1 };
    if r_inner <= 0.0 {
        verts.push(Vec3::zeros());
    }
    let ring_base = |k: usize| -> usize {
        if r_inner > 0.0 {
            k * sectors
        } else {
            1 + (k - 1) * sectors
        }
    };
    for k in start_ring..=rings {
        let r = r_inner + (r_outer - r_inner) * k as f64 / rings as f64;
        for s in 0..sectors {
            let th = 2.0 * PI * s as f64 / sectors as f64;
            verts.push(Vec3::new(r * th.cos(), r * th.sin(), 0.0));
        }
    }
    if r_inner <= 0.0 {
        let b = ring_base(1);
        for s in 0..sectors {
            faces.push([0, b + s, b + (s + 1) % sectors]);
        }
    }
    for k in start_ring..rings {
        for s in 0..sectors {
            let s1 = (s + 1) % sectors;
            let (a, b) = (ring_base(k), ring_base(k + 1));
            faces.push([a + s, b + s, b + s1]);
            faces.push([a + s, b + s1, a + s1]);
        }
    }
    TriMesh::new(verts, faces).expect("annulus is valid")
}

/// Latitude-longitude sphere centred at the origin, outward normals.
pub fn uv_sphere(r: f64, n_lon: usize, n_lat: usize) -> TriMesh {
    let mut verts = vec![Vec3::new(0.0, 0.0, -r)];
    for j in 1..n_lat {
        let th = PI * j as f64 / n_lat as f64 - FRAC_PI_2;
        for i in 0..n_lon {
            let ph = 2.0 * PI * i as f64 / n_lon as f64;
            verts.push(r * Vec3::new(th.cos() * ph.cos(), th.cos() * ph.sin(), th.sin()));
        }
    }
    verts.push(Vec3::new(0.0, 0.0, r));
    let top = verts.len() - 1;
    let ring = |j: usize, i: usize| 1 + (j - 1) * n_lon + (i % n_lon);
    let mut faces = Vec::new();
    for i in 0..n_lon {
        faces.push([0, ring(1, i + 1), ring(1, i)]);
        faces.push([top, ring(n_lat - 1, i), ring(n_lat - 1, i + 1)]);
    }
    for j in 1..n_lat - 1 {
        for i in 0..n_lon {
            faces.push([ring(j, i), ring(j, i + 1), ring(j + 1, i + 1)]);
            faces.push([ring(j, i), ring(j + 1, i + 1), ring(j + 1, i)]);
        }
    }
    TriMesh::new(verts, faces).expect("sphere is valid")
}

/// Open cylinder wall of radius `r` around the z axis, outward normals.
pub fn cylinder_wall(r: f64, height: f64, n_around: usize, n_up: usize) -> TriMesh {
    let mut verts = Vec::new();
    for j in 0..=n_up {
        for i in 0..n_around {
            let th = 2.0 * PI * i as f64 / n_around as f64;
            verts.push(Vec3::new(r * th.cos(), r * th.sin(), height * j as f64 / n_up as f64));
        }
    }
    let id = |i: usize, j: usize| (i % n_around) + n_around * j;
    let mut faces = Vec::new();
    for j in 0..n_up {
        for i in 0..n_around {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(verts, faces).expect("cylinder is valid")
}

/// Quarter of a cylinder surface: radius `r`, angle 0..90° in the xz-plane
/// (bulging towards −z), `length` along y. Normals point to the axis side.
pub fn quarter_cylinder(r: f64, length: f64, n_arc: usize, n_len: usize) -> TriMesh {
    let (v, f) = quad_grid(n_arc, n_len, |u, s| {
        let th = FRAC_PI_2 * u;
        Vec3::new(r * th.sin(), s * length, r * (1.0 - th.cos()))
    });
    let mut m = TriMesh::new(v, f).expect("quarter cylinder is valid");
    // orient so normals face the axis at (·, ·, r)
    let c = m.face_centroid(0);
    if m.face_normal(0).dot(&(Vec3::new(0.0, c.y, r) - c)) < 0.0 {
        for face in &mut m.faces {
            face.swap(1, 2);
        }
    }
    m
}

/// Closed axis-aligned box surface with 12 triangles.
pub fn box_surface(min: Vec3, max: Vec3) -> TriMesh {
    let c = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let verts = (0..8).map(c).collect();
    let faces = vec![
        [0, 2, 3],
        [0, 3, 1], // z min
        [4, 5, 7],
        [4, 7, 6], // z max
        [0, 1, 5],
        [0, 5, 4], // y min
        [2, 6, 7],
        [2, 7, 3], // y max
        [0, 4, 6],
        [0, 6, 2], // x min
        [1, 3, 7],
        [1, 7, 5], // x max
    ];
    TriMesh::new(verts, faces).expect("box surface is valid")
}
