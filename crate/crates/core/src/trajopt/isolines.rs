use std::collections::HashMap;

use super::{PathKind, Polyline, ScalarFieldOnSlice, TrajError};
use crate::meshcore::{edge_key, Vec3};
use crate::slicing::Slice;

const SNAP: f64 = 1e-9;

/// Level curves at `min + spacing/2 + k·spacing`, with `min` taken per
/// connected region of the slice. Each polyline carries its
/// `(region, k)` index.
pub fn extract_isolines(slice: &Slice, field: &ScalarFieldOnSlice, spacing: f64) -> Result<Vec<Polyline>, TrajError> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(TrajError::InvalidArgument(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let m = &slice.surface;
    let phi = &field.values;
    if phi.len() != m.vertices.len() {
        return Err(TrajError::InvalidArgument(
            "field length does not match the slice".into(),
        ));
    }
    let (comp, ncomp) = m.vertex_components();
    let mut range = vec![(f64::INFINITY, f64::NEG_INFINITY); ncomp];
    for (v, &c) in comp.iter().enumerate() {
        range[c].0 = range[c].0.min(phi[v]);
        range[c].1 = range[c].1.max(phi[v]);
    }
    let span = range.iter().map(|r| r.1 - r.0).fold(0.0, f64::max);
    let scale = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(span > 1e-12 * scale.max(1e-300)) || !span.is_finite() {
        return Err(TrajError::DegenerateField("the scalar field is constant".into()));
    }
    let mut faces_by_comp: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for (f, face) in m.faces.iter().enumerate() {
        faces_by_comp[comp[face[0]]].push(f);
    }

    let mut out = Vec::new();
    for c in 0..ncomp {
        let (lo, hi) = range[c];
        let mut k = 0usize;
        loop {
            let level = lo + spacing * (0.5 + k as f64);
            if level >= hi {
                break;
            }
            for mut line in level_curves(slice, phi, &faces_by_comp[c], level) {
                line.iso_index = Some((c, k));
                out.push(line);
            }
            k += 1;
        }
    }
    Ok(out)
}

/// Chained marching-triangle segments of `{φ = level}` over `faces`.
fn level_curves(slice: &Slice, phi: &[f64], faces: &[usize], level: f64) -> Vec<Polyline> {
    let m = &slice.surface;
    let mut key_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pts: Vec<(Vec3, Vec3)> = Vec::new();
    let mut segs: Vec<[usize; 2]> = Vec::new();
    for &f in faces {
        let face = m.faces[f];
        let above = face.map(|v| phi[v] > level);
        let n_above = above.iter().filter(|&&a| a).count();
        if n_above == 0 || n_above == 3 {
            continue;
        }
        let lone = (0..3).find(|&i| above[i] == (n_above == 1)).unwrap();
        let others = [(lone + 1) % 3, (lone + 2) % 3];
        let mut ends = [0usize; 2];
        for (slot, &o) in others.iter().enumerate() {
            let (a, b) = edge_key(face[lone], face[o]);
            let t = (level - phi[a]) / (phi[b] - phi[a]);
            let key = if t < SNAP {
                (a, a)
            } else if t > 1.0 - SNAP {
                (b, b)
            } else {
                (a, b)
            };
            ends[slot] = *key_index.entry(key).or_insert_with(|| {
                let p = m.vertices[a] + (m.vertices[b] - m.vertices[a]) * t.clamp(0.0, 1.0);
                let n = slice.normals[a] * (1.0 - t) + slice.normals[b] * t;
                let n = if n.norm() > 0.0 {
                    n.normalize()
                } else {
                    slice.normals[a]
                };
                let (p, n) = if key.0 == key.1 {
                    (m.vertices[key.0], slice.normals[key.0])
                } else {
                    (p, n)
                };
                pts.push((p, n));
                pts.len() - 1
            });
        }
        if ends[0] != ends[1] {
            segs.push(ends);
        }
    }
    // deduplicate segments produced twice through snapped vertices
    let mut seen = std::collections::HashSet::new();
    segs.retain(|s| seen.insert(edge_key(s[0], s[1])));

    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); pts.len()];
    for (i, s) in segs.iter().enumerate() {
        incident[s[0]].push(i);
        incident[s[1]].push(i);
    }
    let mut used = vec![false; segs.len()];
    let mut lines = Vec::new();
    // open chains start at dangling ends, then remaining loops
    let mut starts: Vec<usize> = (0..pts.len()).filter(|&p| incident[p].len() == 1).collect();
    starts.extend(0..pts.len());
    for s in starts {
        while let Some(&first) = incident[s].iter().find(|&&e| !used[e]) {
            let mut chain = vec![s];
            let mut cur = s;
            let mut e = first;
            loop {
                used[e] = true;
                let next = if segs[e][0] == cur { segs[e][1] } else { segs[e][0] };
                chain.push(next);
                cur = next;
                match incident[cur].iter().find(|&&x| !used[x]) {
                    Some(&x) => e = x,
                    None => break,
                }
            }
            let closed = chain.len() > 3 && chain[0] == chain[chain.len() - 1];
            if closed {
                chain.pop();
            }
            let mut line = Polyline::new(
                chain.iter().map(|&i| pts[i].0).collect(),
                chain.iter().map(|&i| pts[i].1).collect(),
                closed,
                PathKind::Infill,
            );
            line.dedup(1e-6);
            if line.len() >= 2 {
                lines.push(line);
            }
        }
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fea::SymTensor;
    use crate::meshcore::shapes;
    use std::f64::consts::PI;

    fn slice_of(m: crate::meshcore::TriMesh) -> Slice {
        let n = m.vertices.len();
        Slice::from_surface(m, vec![SymTensor::default(); n], 0, 0.0).unwrap()
    }

    fn field(values: Vec<f64>) -> ScalarFieldOnSlice {
        ScalarFieldOnSlice {
            values,
            residual: 0.0,
            scale: 1.0,
            eps: 0.0,
        }
    }

    #[test]
    fn straight_lines_on_square() {
        let s = slice_of(shapes::planar_grid(1.0, 1.0, 7, 7));
        let f = field(s.surface.vertices.iter().map(|p| p.x).collect());
        let mut lines = extract_isolines(&s, &f, 0.1).unwrap();
        assert_eq!(lines.len(), 10);
        lines.sort_by(|a, b| a.points[0].x.total_cmp(&b.points[0].x));
        for (k, l) in lines.iter().enumerate() {
            assert!(!l.closed);
            for p in &l.points {
                assert!((p.x - (0.05 + 0.1 * k as f64)).abs() < 1e-12);
            }
            assert!((l.length() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn concentric_circles_on_disk() {
        let s = slice_of(shapes::annulus(0.0, 1.0, 40, 256));
        let f = field(s.surface.vertices.iter().map(|p| p.norm()).collect());
        let lines = extract_isolines(&s, &f, 0.25).unwrap();
        assert_eq!(lines.len(), 4);
        for l in &lines {
            assert!(l.closed);
            let r = 0.125 + 0.25 * l.iso_index.unwrap().1 as f64;
            assert!((l.length() - 2.0 * PI * r).abs() / (2.0 * PI * r) < 0.02);
        }
    }

    #[test]
    fn constant_field_is_degenerate() {
        let s = slice_of(shapes::planar_grid(1.0, 1.0, 2, 2));
        let f = field(vec![3.0; s.vertex_count()]);
        assert!(matches!(
            extract_isolines(&s, &f, 0.1),
            Err(TrajError::DegenerateField(_))
        ));
    }

    #[test]
    fn spacing_wider_than_range() {
        let s = slice_of(shapes::planar_grid(1.0, 1.0, 2, 2));
        let f = field(s.surface.vertices.iter().map(|p| p.x).collect());
        assert!(extract_isolines(&s, &f, 5.0).unwrap().is_empty());
    }
}
