//! Mesh file formats: TetGen `.node`/`.ele`, Wavefront OBJ and STL.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{MeshError, TetMesh, TriMesh, Vec3, STL_WELD_TOLERANCE};

/// Reads a TetGen-style `.node` / `.ele` pair.
pub fn load_tet_mesh(node_path: &Path, ele_path: &Path) -> Result<TetMesh, MeshError> {
    let node = fs::read_to_string(node_path)?;
    let ele = fs::read_to_string(ele_path)?;
    parse_tet_mesh(&node, &ele)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse_num<T: std::str::FromStr>(tok: &str, src: &str, line: usize, what: &str) -> Result<T, MeshError> {
    tok.parse().map_err(|_| MeshError::Parse {
        source_name: src.into(),
        line,
        message: format!("expected {what}, found {tok:?}"),
    })
}

/// Parses `.node` and `.ele` contents. Indexing (0- or 1-based) follows the
/// first node index in the `.node` file.
pub fn parse_tet_mesh(node_text: &str, ele_text: &str) -> Result<TetMesh, MeshError> {
    let mut lines = data_lines(node_text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| MeshError::Empty(".node file has no header".into()))?;
    if header.len() < 2 {
        return Err(MeshError::Parse {
            source_name: ".node".into(),
            line: hl,
            message: "header must be `<points> <dim> [attributes] [markers]`".into(),
        });
    }
    let npts: usize = parse_num(header[0], ".node", hl, "point count")?;
    let dim: usize = parse_num(header[1], ".node", hl, "dimension")?;
    if dim != 3 {
        return Err(MeshError::Parse {
            source_name: ".node".into(),
            line: hl,
            message: format!("dimension must be 3, found {dim}"),
        });
    }
    let nattr: usize = header
        .get(2)
        .map(|t| parse_num(t, ".node", hl, "attribute count"))
        .transpose()?
        .unwrap_or(0);
    let has_marker = header
        .get(3)
        .map(|t| parse_num::<usize>(t, ".node", hl, "marker flag"))
        .transpose()?
        .unwrap_or(0)
        > 0;
    if npts == 0 {
        return Err(MeshError::Empty(".node file declares no points".into()));
    }

    let mut base = None;
    let mut verts = Vec::with_capacity(npts);
    let mut markers = Vec::new();
    for (line, toks) in lines.by_ref().take(npts) {
        if toks.len() < 4 {
            return Err(MeshError::Parse {
                source_name: ".node".into(),
                line,
                message: "expected `index x y z`".into(),
            });
        }
        let idx: i64 = parse_num(toks[0], ".node", line, "index")?;
        let b = *base.get_or_insert(idx);
        if idx - b != verts.len() as i64 {
            return Err(MeshError::Parse {
                source_name: ".node".into(),
                line,
                message: format!("node indices must be consecutive, found {idx}"),
            });
        }
        let x = parse_num(toks[1], ".node", line, "coordinate")?;
        let y = parse_num(toks[2], ".node", line, "coordinate")?;
        let z = parse_num(toks[3], ".node", line, "coordinate")?;
        verts.push(Vec3::new(x, y, z));
        if has_marker {
            let tok = toks.get(4 + nattr).ok_or_else(|| MeshError::Parse {
                source_name: ".node".into(),
                line,
                message: "missing boundary marker".into(),
            })?;
            markers.push(parse_num(tok, ".node", line, "marker")?);
        }
    }
    if verts.len() != npts {
        return Err(MeshError::Parse {
            source_name: ".node".into(),
            line: 0,
            message: format!("header declares {npts} points, file has {}", verts.len()),
        });
    }
    let base = base.unwrap_or(0);
    if base != 0 && base != 1 {
        return Err(MeshError::Parse {
            source_name: ".node".into(),
            line: hl + 1,
            message: format!("first node index must be 0 or 1, found {base}"),
        });
    }

    let mut lines = data_lines(ele_text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| MeshError::Empty(".ele file has no header".into()))?;
    let ntets: usize = parse_num(header[0], ".ele", hl, "tet count")?;
    let per: usize = header
        .get(1)
        .map(|t| parse_num(t, ".ele", hl, "nodes per tet"))
        .transpose()?
        .unwrap_or(4);
    if per != 4 {
        return Err(MeshError::Parse {
            source_name: ".ele".into(),
            line: hl,
            message: format!("only linear tets (4 nodes) are supported, found {per}"),
        });
    }
    if ntets == 0 {
        return Err(MeshError::Empty(".ele file declares no tetrahedra".into()));
    }
    let mut tets = Vec::with_capacity(ntets);
    for (line, toks) in lines.take(ntets) {
        if toks.len() < 5 {
            return Err(MeshError::Parse {
                source_name: ".ele".into(),
                line,
                message: "expected `index v1 v2 v3 v4`".into(),
            });
        }
        let mut t = [0usize; 4];
        for k in 0..4 {
            let raw: i64 = parse_num(toks[k + 1], ".ele", line, "vertex index")?;
            let v = raw - base;
            if v < 0 || v as usize >= verts.len() {
                return Err(MeshError::IndexOutOfRange {
                    element: "tetrahedron",
                    element_index: tets.len(),
                    index: raw,
                    count: verts.len(),
                });
            }
            t[k] = v as usize;
        }
        tets.push(t);
    }
    if tets.len() != ntets {
        return Err(MeshError::Parse {
            source_name: ".ele".into(),
            line: 0,
            message: format!("header declares {ntets} tets, file has {}", tets.len()),
        });
    }
    let mesh = TetMesh::new(verts, tets)?;
    Ok(if has_marker { mesh.with_markers(markers) } else { mesh })
}

/// Writes a 0-based `.node`/`.ele` pair (with markers when present).
pub fn write_tet_mesh(mesh: &TetMesh, node_path: &Path, ele_path: &Path) -> Result<(), MeshError> {
    let (node, ele) = format_tet_mesh(mesh);
    fs::write(node_path, node)?;
    fs::write(ele_path, ele)?;
    Ok(())
}

pub fn format_tet_mesh(mesh: &TetMesh) -> (String, String) {
    let mut node = String::new();
    let has_markers = mesh.markers.is_some();
    writeln!(node, "{} 3 0 {}", mesh.vertices.len(), u8::from(has_markers)).unwrap();
    for (i, v) in mesh.vertices.iter().enumerate() {
        write!(node, "{i} {} {} {}", v.x, v.y, v.z).unwrap();
        if let Some(m) = &mesh.markers {
            write!(node, " {}", m[i]).unwrap();
        }
        node.push('\n');
    }
    let mut ele = String::new();
    writeln!(ele, "{} 4 0", mesh.tets.len()).unwrap();
    for (i, t) in mesh.tets.iter().enumerate() {
        writeln!(ele, "{i} {} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    (node, ele)
}

/// Reads an OBJ or STL surface, dispatching on extension and content.
pub fn load_tri_mesh(path: &Path) -> Result<TriMesh, MeshError> {
    let bytes = fs::read(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("obj") => parse_obj(
            std::str::from_utf8(&bytes)
                .map_err(|_| MeshError::UnsupportedFormat("OBJ file is not valid UTF-8".into()))?,
        ),
        Some("stl") => parse_stl(&bytes),
        _ => {
            if is_binary_stl(&bytes) || bytes.starts_with(b"solid") {
                parse_stl(&bytes)
            } else if let Ok(text) = std::str::from_utf8(&bytes) {
                parse_obj(text)
            } else {
                Err(MeshError::UnsupportedFormat(path.display().to_string()))
            }
        }
    }
}

/// Parses `v` and `f` records of an OBJ file. Polygons are fan-triangulated;
/// texture/normal references are ignored.
pub fn parse_obj(text: &str) -> Result<TriMesh, MeshError> {
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for (line, toks) in data_lines(text) {
        match toks[0] {
            "v" => {
                if toks.len() < 4 {
                    return Err(MeshError::Parse {
                        source_name: "obj".into(),
                        line,
                        message: "vertex needs three coordinates".into(),
                    });
                }
                let c: Vec<f64> = toks[1..4]
                    .iter()
                    .map(|t| parse_num(t, "obj", line, "coordinate"))
                    .collect::<Result<_, _>>()?;
                verts.push(Vec3::new(c[0], c[1], c[2]));
            }
            "f" => {
                let mut idx = Vec::with_capacity(toks.len() - 1);
                for t in &toks[1..] {
                    let head = t.split('/').next().unwrap_or("");
                    let raw: i64 = parse_num(head, "obj", line, "face index")?;
                    let v = if raw < 0 { verts.len() as i64 + raw } else { raw - 1 };
                    if v < 0 || v as usize >= verts.len() {
                        return Err(MeshError::Parse {
                            source_name: "obj".into(),
                            line,
                            message: format!(
                                "face references vertex {raw}, but only {} vertices are defined",
                                verts.len()
                            ),
                        });
                    }
                    idx.push(v as usize);
                }
                if idx.len() < 3 {
                    return Err(MeshError::Parse {
                        source_name: "obj".into(),
                        line,
                        message: "face needs at least three vertices".into(),
                    });
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if verts.is_empty() || faces.is_empty() {
        return Err(MeshError::Empty("OBJ has no faces".into()));
    }
    TriMesh::new_oriented(verts, faces)
}

/// Serializes vertices and faces. Numbers
/// use shortest round-trip formatting, so load → save is a fixed point.
pub fn format_obj(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for f in &mesh.faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    out
}

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    fs::write(path, format_obj(mesh))?;
    Ok(())
}

fn is_binary_stl(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    bytes.len() == 84 + 50 * n
}

/// Parses binary (or ASCII) STL and welds coincident corners.
pub fn parse_stl(bytes: &[u8]) -> Result<TriMesh, MeshError> {
    let tris = if is_binary_stl(bytes) {
        let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        let f = |o: usize| f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64;
        (0..n)
            .map(|i| {
                let base = 84 + 50 * i + 12;
                let p = |k: usize| {
                    let o = base + 12 * k;
                    Vec3::new(f(o), f(o + 4), f(o + 8))
                };
                [p(0), p(1), p(2)]
            })
            .collect::<Vec<_>>()
    } else if bytes.starts_with(b"solid") {
        parse_ascii_stl(bytes)?
    } else {
        return Err(MeshError::UnsupportedFormat("not an STL file".into()));
    };
    if tris.is_empty() {
        return Err(MeshError::Empty("STL has no facets".into()));
    }
    let mut welder = Welder::new(STL_WELD_TOLERANCE);
    let faces: Vec<[usize; 3]> = tris.iter().map(|t| t.map(|p| welder.insert(p))).collect();
    TriMesh::new_oriented(welder.points, faces)
}

fn parse_ascii_stl(bytes: &[u8]) -> Result<Vec<[Vec3; 3]>, MeshError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| MeshError::UnsupportedFormat("STL is neither binary nor ASCII".into()))?;
    let mut tris = Vec::new();
    let mut cur = Vec::new();
    for (line, toks) in data_lines(text) {
        if toks[0] == "vertex" {
            if toks.len() < 4 {
                return Err(MeshError::Parse {
                    source_name: "stl".into(),
                    line,
                    message: "vertex needs three coordinates".into(),
                });
            }
            let x = parse_num(toks[1], "stl", line, "coordinate")?;
            let y = parse_num(toks[2], "stl", line, "coordinate")?;
            let z = parse_num(toks[3], "stl", line, "coordinate")?;
            cur.push(Vec3::new(x, y, z));
        } else if toks[0] == "endfacet" {
            if cur.len() != 3 {
                return Err(MeshError::Parse {
                    source_name: "stl".into(),
                    line,
                    message: format!("facet has {} vertices", cur.len()),
                });
            }
            tris.push([cur[0], cur[1], cur[2]]);
            cur.clear();
        }
    }
    Ok(tris)
}

/// Binary STL with zeroed normals and attribute fields.
pub fn format_stl(mesh: &TriMesh) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend_from_slice(&(mesh.faces.len() as u32).to_le_bytes());
    for fi in 0..mesh.faces.len() {
        let n = mesh.face_normal(fi);
        for c in n.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        for p in mesh.face_points(fi) {
            for c in p.iter() {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

/// Merges points within a tolerance using a hashed grid.
struct Welder {
    tol: f64,
    points: Vec<Vec3>,
    grid: HashMap<[i64; 3], Vec<usize>>,
}

impl Welder {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            points: Vec::new(),
            grid: HashMap::new(),
        }
    }

    fn cell(&self, p: &Vec3) -> [i64; 3] {
        [
            (p.x / self.tol).floor() as i64,
            (p.y / self.tol).floor() as i64,
            (p.z / self.tol).floor() as i64,
        ]
    }

    fn insert(&mut self, p: Vec3) -> usize {
        let c = self.cell(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &i in ids {
                            if (self.points[i] - p).norm() <= self.tol {
                                return i;
                            }
                        }
                    }
                }
            }
        }
        self.points.push(p);
        let id = self.points.len() - 1;
        self.grid.entry(c).or_default().push(id);
        id
    }
}
