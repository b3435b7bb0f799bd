use serde::{Deserialize, Serialize};

use super::{PathKind, Polyline, TrajError};
use crate::meshcore::spatial::{SegmentIndex, TriangleIndex};
use crate::meshcore::Vec3;
use crate::slicing::Slice;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayerOptions {
    /// Number of boundary-parallel contour rings.
    pub contour_count: usize,
    /// Lift of travel moves along the surface normal (mm).
    pub travel_lift: f64,
    /// Trimmed infill pieces shorter than this fraction of the spacing
    /// are dropped.
    pub min_piece: f64,
}

impl Default for LayerOptions {
    fn default() -> Self {
        Self {
            contour_count: 2,
            travel_lift: 0.1,
            min_piece: 0.5,
        }
    }
}

/// Ordered print and travel moves of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerToolpath {
    pub layer: usize,
    pub iso: f64,
    /// Print polylines with a travel polyline between each consecutive pair.
    pub elements: Vec<Polyline>,
    pub print_length: f64,
    /// Straight-line distance covered by travel moves.
    pub travel_length: f64,
}

impl LayerToolpath {
    pub fn prints(&self) -> impl Iterator<Item = &Polyline> {
        self.elements.iter().filter(|p| p.kind.is_print())
    }

    pub fn infill(&self) -> impl Iterator<Item = &Polyline> {
        self.elements.iter().filter(|p| p.kind == PathKind::Infill)
    }
}

/// Sum of jumps from `start` through the lines in order.
pub fn travel_length(start: Option<Vec3>, lines: &[Polyline]) -> f64 {
    let mut cur = start;
    let mut total = 0.0;
    for l in lines {
        if let Some(c) = cur {
            total += (l.start() - c).norm();
        }
        cur = Some(l.end());
    }
    total
}

/// Greedy nearest-endpoint ordering starting from `start` (or the first
/// line's start). Open lines may be reversed. The result is never longer
/// in travel than the input order.
pub fn chain_greedy(start: Option<Vec3>, lines: &[Polyline]) -> Vec<Polyline> {
    if lines.is_empty() {
        return Vec::new();
    }
    let mut used = vec![false; lines.len()];
    let mut out = Vec::with_capacity(lines.len());
    let mut cur = start.unwrap_or_else(|| lines[0].start());
    for _ in 0..lines.len() {
        let mut best: Option<(f64, usize, bool)> = None;
        for (i, l) in lines.iter().enumerate() {
            if used[i] {
                continue;
            }
            let d0 = (l.start() - cur).norm();
            if best.is_none_or(|b| d0 < b.0) {
                best = Some((d0, i, false));
            }
            if !l.closed {
                let d1 = (l.end() - cur).norm();
                if best.is_none_or(|b| d1 < b.0) {
                    best = Some((d1, i, true));
                }
            }
        }
        let (_, i, rev) = best.expect("an unused line remains");
        used[i] = true;
        let l = if rev { lines[i].reversed() } else { lines[i].clone() };
        cur = l.end();
        out.push(l);
    }
    let start = start.or(Some(lines[0].start()));
    if travel_length(start, &out) <= travel_length(start, lines) {
        out
    } else {
        lines.to_vec()
    }
}

/// Unit inward direction in the tangent plane at each loop vertex, and the
/// miter length factor.
fn inward_miters(points: &[Vec3], normals: &[Vec3]) -> Vec<(Vec3, f64)> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let p = points[(i + n - 1) % n];
            let q = points[(i + 1) % n];
            let nv = normals[i];
            let t1 = (points[i] - p).normalize();
            let t2 = (q - points[i]).normalize();
            let m1 = nv.cross(&t1);
            let m2 = nv.cross(&t2);
            let m = m1 + m2;
            if m.norm() < 1e-9 {
                return (m1.normalize(), 1.0);
            }
            let m = m.normalize();
            let cos = m.dot(&m1).max(1.0 / 3.0);
            (m, 1.0 / cos)
        })
        .collect()
}

/// Assembles contours and trimmed infill into an ordered layer.
///
/// Contour ring `k` lies `(k + ½)·spacing` inside each boundary loop:
/// loop vertices are pushed along the mitred inward tangent-plane normal,
/// projected back onto the slice and culled where they come closer to the
/// boundary than the offset (self-overlap). Infill is cut where it comes
/// within `contour_count·spacing` of the boundary. Contours print
/// outermost first, then the infill in greedy nearest-endpoint order, with
/// a lifted travel move between consecutive lines.
pub fn build_layer_path(
    lines: &[Polyline],
    slice: &Slice,
    spacing: f64,
    opts: &LayerOptions,
) -> Result<LayerToolpath, TrajError> {
    if !(spacing > 0.0) {
        return Err(TrajError::InvalidArgument(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let surf = &slice.surface;
    let loops = surf.boundary_loops();
    let mut boundary_segments = Vec::new();
    for lp in &loops {
        for k in 0..lp.len() {
            boundary_segments.push((surf.vertices[lp[k]], surf.vertices[lp[(k + 1) % lp.len()]]));
        }
    }
    let nseg = boundary_segments.len();
    let boundary = (nseg > 0).then(|| SegmentIndex::new(boundary_segments, vec![0; nseg]));
    let tri_index = TriangleIndex::new(surf);

    let mut contours = Vec::new();
    if let Some(bidx) = &boundary {
        for k in 0..opts.contour_count {
            let d = (k as f64 + 0.5) * spacing;
            for (li, lp) in loops.iter().enumerate() {
                let pts: Vec<Vec3> = lp.iter().map(|&v| surf.vertices[v]).collect();
                let nrm: Vec<Vec3> = lp.iter().map(|&v| slice.normals[v]).collect();
                let miters = inward_miters(&pts, &nrm);
                let mut ring_p = Vec::new();
                let mut ring_n = Vec::new();
                for i in 0..pts.len() {
                    let (m, f) = miters[i];
                    let guess = pts[i] + m * (d * f);
                    let Some((face, q, w)) = tri_index.project(surf, &guess) else {
                        continue;
                    };
                    if bidx.distance(&q) < 0.9 * d {
                        continue;
                    }
                    let fv = surf.faces[face];
                    let n = (slice.normals[fv[0]] * w[0] + slice.normals[fv[1]] * w[1] + slice.normals[fv[2]] * w[2])
                        .normalize();
                    ring_p.push(q);
                    ring_n.push(n);
                }
                let mut ring = Polyline::new(ring_p, ring_n, true, PathKind::Contour);
                ring.dedup(1e-6);
                if ring.len() < 3 || ring.length() < 2.0 * spacing {
                    log::warn!(
                        "layer {}: contour {k} of boundary loop {li} collapsed; skipped",
                        slice.layer
                    );
                    continue;
                }
                contours.push(ring);
            }
        }
    }

    let trim = opts.contour_count as f64 * spacing;
    let mut infill = Vec::new();
    for l in lines {
        let pieces = match (&boundary, trim > 0.0) {
            (Some(b), true) => trim_line(l, b, trim),
            _ => vec![l.clone()],
        };
        infill.extend(
            pieces
                .into_iter()
                .filter(|p| p.len() >= 2 && p.length() >= opts.min_piece * spacing),
        );
    }

    let start = contours.last().map(|c| c.end());
    let ordered = chain_greedy(start, &infill);
    let prints: Vec<Polyline> = contours.into_iter().chain(ordered).collect();
    let mut elements = Vec::with_capacity(2 * prints.len());
    let mut travel = 0.0;
    let mut print_length = 0.0;
    for (i, p) in prints.iter().enumerate() {
        if i > 0 {
            let prev = &prints[i - 1];
            let a = prev.end();
            let na = if prev.closed {
                prev.normals[0]
            } else {
                prev.normals[prev.len() - 1]
            };
            let b = p.start();
            let nb = p.normals[0];
            travel += (b - a).norm();
            elements.push(Polyline::new(
                vec![a + na * opts.travel_lift, b + nb * opts.travel_lift],
                vec![na, nb],
                false,
                PathKind::Travel,
            ));
        }
        print_length += p.length();
        elements.push(p.clone());
    }
    Ok(LayerToolpath {
        layer: slice.layer,
        iso: slice.iso,
        elements,
        print_length,
        travel_length: travel,
    })
}

/// Splits a line into the pieces at least `trim` away from the boundary,
/// cutting exactly at the threshold.
fn trim_line(line: &Polyline, boundary: &SegmentIndex, trim: f64) -> Vec<Polyline> {
    let n = line.len();
    let dist: Vec<f64> = line.points.iter().map(|p| boundary.distance(p)).collect();
    let inside: Vec<bool> = dist.iter().map(|&d| d >= trim).collect();
    if inside.iter().all(|&b| b) {
        return vec![line.clone()];
    }
    if !inside.iter().any(|&b| b) {
        return Vec::new();
    }
    // walk from an outside point so closed lines unroll cleanly
    let first_out = inside.iter().position(|&b| !b).unwrap();
    let order: Vec<usize> = if line.closed {
        (0..=n).map(|k| (first_out + k) % n).collect()
    } else {
        (0..n).collect()
    };
    let cut = |a: usize, b: usize| -> (Vec3, Vec3) {
        // bisect for the threshold crossing on segment a→b
        let (pa, pb) = (line.points[a], line.points[b]);
        let (mut lo, mut hi) = (0.0, 1.0);
        let a_in = inside[a];
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let d = boundary.distance(&(pa + (pb - pa) * mid));
            if (d >= trim) == a_in {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let nrm = (line.normals[a] * (1.0 - t) + line.normals[b] * t).normalize();
        (pa + (pb - pa) * t, nrm)
    };
    let mut pieces = Vec::new();
    let mut cur: Option<(Vec<Vec3>, Vec<Vec3>)> = None;
    for w in 0..order.len() {
        let i = order[w];
        if w > 0 {
            let j = order[w - 1];
            if inside[i] != inside[j] {
                let (p, nn) = cut(j, i);
                if inside[i] {
                    cur = Some((vec![p], vec![nn]));
                } else if let Some((mut ps, mut ns)) = cur.take() {
                    ps.push(p);
                    ns.push(nn);
                    pieces.push((ps, ns));
                }
            }
        } else if inside[i] {
            cur = Some((Vec::new(), Vec::new()));
        }
        if inside[i] {
            if let Some((ps, ns)) = cur.as_mut() {
                ps.push(line.points[i]);
                ns.push(line.normals[i]);
            }
        }
    }
    if let Some(c) = cur.take() {
        pieces.push(c);
    }
    pieces
        .into_iter()
        .map(|(ps, ns)| {
            let mut p = Polyline {
                points: ps,
                normals: ns,
                closed: false,
                kind: line.kind,
                iso_index: line.iso_index,
            };
            p.dedup(1e-6);
            p
        })
        .collect()
}
