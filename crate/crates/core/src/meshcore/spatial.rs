//! Uniform-grid spatial hashing over axis-aligned boxes, with closest-point
//! queries on segments and triangles and point location in tet meshes.

use std::collections::HashMap;

use super::{TetMesh, TriMesh, Vec3};

/// Buckets item bounding boxes into a uniform grid.
#[derive(Debug, Clone)]
pub struct BoxGrid {
    cell: f64,
    origin: Vec3,
    buckets: HashMap<[i64; 3], Vec<usize>>,
    boxes: Vec<(Vec3, Vec3)>,
    /// Range of occupied cell keys.
    kmin: [i64; 3],
    kmax: [i64; 3],
}

impl BoxGrid {
    /// `cell` should be comparable to the typical item size.
    pub fn new(boxes: Vec<(Vec3, Vec3)>, cell: f64) -> Self {
        let cell = if cell > 0.0 { cell } else { 1.0 };
        let origin = boxes
            .iter()
            .fold(Vec3::repeat(f64::INFINITY), |acc, (lo, _)| acc.inf(lo));
        let origin = if origin.iter().all(|c| c.is_finite()) {
            origin
        } else {
            Vec3::zeros()
        };
        let mut g = Self {
            cell,
            origin,
            buckets: HashMap::new(),
            boxes,
            kmin: [i64::MAX; 3],
            kmax: [i64::MIN; 3],
        };
        for i in 0..g.boxes.len() {
            let (lo, hi) = g.boxes[i];
            let (a, b) = (g.key(&lo), g.key(&hi));
            for d in 0..3 {
                g.kmin[d] = g.kmin[d].min(a[d]);
                g.kmax[d] = g.kmax[d].max(b[d]);
            }
            for x in a[0]..=b[0] {
                for y in a[1]..=b[1] {
                    for z in a[2]..=b[2] {
                        g.buckets.entry([x, y, z]).or_default().push(i);
                    }
                }
            }
        }
        g
    }

    fn key(&self, p: &Vec3) -> [i64; 3] {
        let q = (p - self.origin) / self.cell;
        [q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64]
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Items whose boxes contain `p`.
    pub fn containing(&self, p: &Vec3) -> impl Iterator<Item = usize> + '_ {
        let p = *p;
        self.buckets
            .get(&self.key(&p))
            .into_iter()
            .flatten()
            .copied()
            .filter(move |&i| {
                let (lo, hi) = self.boxes[i];
                (0..3).all(|d| p[d] >= lo[d] - 1e-12 && p[d] <= hi[d] + 1e-12)
            })
    }

    /// Sorted, de-duplicated items with boxes intersecting the ball
    /// bounding box `p ± r`.
    pub fn near(&self, p: &Vec3, r: f64) -> Vec<usize> {
        let (mut a, mut b) = (self.key(&(p - Vec3::repeat(r))), self.key(&(p + Vec3::repeat(r))));
        let mut cells = 1u128;
        for d in 0..3 {
            a[d] = a[d].max(self.kmin[d]);
            b[d] = b[d].min(self.kmax[d]);
            if a[d] > b[d] {
                return Vec::new();
            }
            cells *= (b[d] - a[d] + 1) as u128;
        }
        let mut out = Vec::new();
        if cells > self.buckets.len() as u128 {
            // sparse occupancy: scanning the buckets is cheaper than the cells
            for (k, ids) in &self.buckets {
                if (0..3).all(|d| k[d] >= a[d] && k[d] <= b[d]) {
                    out.extend_from_slice(ids);
                }
            }
        } else {
            for x in a[0]..=b[0] {
                for y in a[1]..=b[1] {
                    for z in a[2]..=b[2] {
                        if let Some(ids) = self.buckets.get(&[x, y, z]) {
                            out.extend_from_slice(ids);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Finds the minimum of `dist(item)` over all items by growing search
    /// radius; `dist` must be a lower-bounded-by-box-distance metric.
    pub fn nearest_by(&self, p: &Vec3, mut dist: impl FnMut(usize) -> f64) -> Option<(usize, f64)> {
        if self.boxes.is_empty() {
            return None;
        }
        let mut r = self.cell;
        loop {
            let mut best: Option<(usize, f64)> = None;
            for i in self.near(p, r) {
                let d = dist(i);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
            if let Some((i, d)) = best {
                if d <= r {
                    return Some((i, d));
                }
            }
            if r > 1e3 * self.cell * (self.boxes.len() as f64).max(1.0) {
                return (0..self.boxes.len())
                    .map(|i| (i, dist(i)))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
            }
            r *= 2.0;
        }
    }
}

fn bbox(points: &[Vec3]) -> (Vec3, Vec3) {
    points.iter().fold(
        (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    )
}

/// Closest point on segment `ab` to `p` and its parameter in `[0,1]`.
pub fn closest_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> (Vec3, f64) {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (*a, 0.0);
    }
    let t = ((p - a).dot(&d) / len2).clamp(0.0, 1.0);
    (a + d * t, t)
}

/// Closest point on triangle `abc` to `p` with its barycentric weights.
pub fn closest_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> (Vec3, [f64; 3]) {
    // Ericson, Real-Time Collision Detection, 5.1.5
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

/// Closest-point queries against a polyline set.
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    segments: Vec<(Vec3, Vec3)>,
    /// Caller-defined tag per segment.
    pub tags: Vec<usize>,
    grid: BoxGrid,
}

impl SegmentIndex {
    pub fn new(segments: Vec<(Vec3, Vec3)>, tags: Vec<usize>) -> Self {
        assert_eq!(segments.len(), tags.len());
        let mean = if segments.is_empty() {
            1.0
        } else {
            segments.iter().map(|(a, b)| (b - a).norm()).sum::<f64>() / segments.len() as f64
        };
        let boxes = segments.iter().map(|(a, b)| bbox(&[*a, *b])).collect();
        Self {
            grid: BoxGrid::new(boxes, mean.max(1e-6) * 2.0),
            segments,
            tags,
        }
    }

    pub fn segment(&self, i: usize) -> (Vec3, Vec3) {
        self.segments[i]
    }

    /// Nearest segment: `(index, distance, closest point, parameter)`.
    pub fn nearest(&self, p: &Vec3) -> Option<(usize, f64, Vec3, f64)> {
        let (i, d) = self.grid.nearest_by(p, |i| {
            let (a, b) = self.segments[i];
            (closest_on_segment(p, &a, &b).0 - p).norm()
        })?;
        let (a, b) = self.segments[i];
        let (q, t) = closest_on_segment(p, &a, &b);
        Some((i, d, q, t))
    }

    /// Distance to the nearest segment.
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.nearest(p).map_or(f64::INFINITY, |n| n.1)
    }
}

/// Closest-point projection onto a triangle mesh.
#[derive(Debug, Clone)]
pub struct TriangleIndex {
    grid: BoxGrid,
}

impl TriangleIndex {
    pub fn new(mesh: &TriMesh) -> Self {
        let boxes = (0..mesh.faces.len()).map(|f| bbox(&mesh.face_points(f))).collect();
        Self {
            grid: BoxGrid::new(boxes, mesh.mean_edge_length().max(1e-6) * 2.0),
        }
    }

    /// `(face, closest point, barycentric weights)`.
    pub fn project(&self, mesh: &TriMesh, p: &Vec3) -> Option<(usize, Vec3, [f64; 3])> {
        let (f, _) = self.grid.nearest_by(p, |f| {
            let [a, b, c] = mesh.face_points(f);
            (closest_on_triangle(p, &a, &b, &c).0 - p).norm()
        })?;
        let [a, b, c] = mesh.face_points(f);
        let (q, w) = closest_on_triangle(p, &a, &b, &c);
        Some((f, q, w))
    }
}

/// Point location in a tetrahedral mesh.
#[derive(Debug, Clone)]
pub struct TetLocator {
    grid: BoxGrid,
}

impl TetLocator {
    pub fn new(mesh: &TetMesh) -> Self {
        let boxes = (0..mesh.tets.len()).map(|t| bbox(&mesh.tet_points(t))).collect();
        Self {
            grid: BoxGrid::new(boxes, mesh.mean_edge_length().max(1e-6) * 1.5),
        }
    }

    /// Containing tet and barycentric weights. Points slightly outside the
    /// mesh fall back to the tet whose clamped barycentric coordinates are
    /// least negative among nearby tets.
    pub fn locate(&self, mesh: &TetMesh, p: &Vec3) -> Option<(usize, [f64; 4])> {
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        let consider = |t: usize, best: &mut Option<(usize, [f64; 4], f64)>| {
            let w = barycentric(mesh.tet_points(t), p);
            let worst = w.iter().copied().fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|b| worst > b.2) {
                *best = Some((t, w, worst));
            }
        };
        for t in self.grid.containing(p) {
            consider(t, &mut best);
            if best.as_ref().is_some_and(|b| b.2 >= -1e-10) {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| b.2 < -1e-10) {
            let r = self.grid.cell;
            for t in self.grid.near(p, r) {
                consider(t, &mut best);
            }
        }
        best.map(|(t, w, _)| {
            if w.iter().all(|&x| x >= 0.0) {
                (t, w)
            } else {
                let mut c = w.map(|x| x.max(0.0));
                let s: f64 = c.iter().sum();
                c.iter_mut().for_each(|x| *x /= s);
                (t, c)
            }
        })
    }
}

/// Barycentric coordinates of `p` in the tet `v`.
pub fn barycentric(v: [Vec3; 4], p: &Vec3) -> [f64; 4] {
    let m = nalgebra::Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
    match m.try_inverse() {
        Some(inv) => {
            let l = inv * (p - v[0]);
            [1.0 - l.x - l.y - l.z, l.x, l.y, l.z]
        }
        None => [0.25; 4],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshcore::shapes;

    #[test]
    fn triangle_closest_regions() {
        let (a, b, c) = (Vec3::zeros(), Vec3::x(), Vec3::y());
        let (q, w) = closest_on_triangle(&Vec3::new(0.25, 0.25, 3.0), &a, &b, &c);
        assert!((q - Vec3::new(0.25, 0.25, 0.0)).norm() < 1e-15);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let (q, _) = closest_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(q, a);
        let (q, _) = closest_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((q - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn segment_index_nearest() {
        let segs = vec![
            (Vec3::zeros(), Vec3::x()),
            (Vec3::new(0.0, 5.0, 0.0), Vec3::new(1.0, 5.0, 0.0)),
        ];
        let idx = SegmentIndex::new(segs, vec![10, 20]);
        let (i, d, _, t) = idx.nearest(&Vec3::new(0.5, 4.0, 0.0)).unwrap();
        assert_eq!(idx.tags[i], 20);
        assert!((d - 1.0).abs() < 1e-15);
        assert!((t - 0.5).abs() < 1e-15);
        // far away still finds something
        assert!((idx.distance(&Vec3::new(0.5, 100.0, 0.0)) - 95.0).abs() < 1e-12);
    }

    #[test]
    fn locate_points_in_box() {
        let m = shapes::grid_box(Vec3::zeros(), Vec3::new(2.0, 1.0, 1.0), [4, 2, 2]);
        let loc = TetLocator::new(&m);
        let p = Vec3::new(1.23, 0.4, 0.77);
        let (t, w) = loc.locate(&m, &p).unwrap();
        assert!(w.iter().all(|&x| x >= -1e-12));
        let q: Vec3 = (0..4).map(|k| m.vertices[m.tets[t][k]] * w[k]).sum();
        assert!((q - p).norm() < 1e-12);
        // slightly outside
        let (_, w) = loc.locate(&m, &Vec3::new(2.0 + 1e-4, 0.5, 0.5)).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_onto_sphere() {
        let m = shapes::uv_sphere(1.0, 32, 16);
        let idx = TriangleIndex::new(&m);
        let (_, q, _) = idx.project(&m, &Vec3::new(3.0, 0.1, 0.2)).unwrap();
        assert!((q.norm() - 1.0).abs() < 0.01);
    }
}
