use serde::{Deserialize, Serialize};

use super::Polyline;
use crate::meshcore::spatial::SegmentIndex;
use crate::meshcore::Vec3;
use crate::numerics::{EnvelopeCholesky, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothOptions {
    /// Smoothing parameter `p ∈ [0, 1]`; 1 interpolates.
    pub p: f64,
    /// Target spacing of the resampled points (mm).
    pub step: f64,
    /// No output point may lie farther than this from the input (mm).
    pub max_deviation: f64,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        Self {
            p: 0.95,
            step: 0.5,
            max_deviation: 0.1,
        }
    }
}

/// Cubic smoothing spline through `(x, y)` minimizing
/// `p Σ(yᵢ − g(xᵢ))² + (1 − p) ∫ g''²`, returning knot values `g` and
/// second derivatives `γ`.
///
/// Open splines are natural with both end values held fixed. Closed
/// splines are periodic with period `x_last + closing_gap`; `x` then
/// lists one entry per distinct point.
pub fn smoothing_spline(x: &[f64], y: &[f64], p: f64, closing_gap: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(x.len(), y.len());
    SplineSystem::new(x, p, closing_gap).fit(y)
}

/// Factored smoothing-spline system for fixed knots, shared by the
/// coordinates of a curve.
struct SplineSystem {
    n: usize,
    p: f64,
    closed: bool,
    /// Knot of each unknown second derivative.
    idx: Vec<usize>,
    /// Columns of `Q`: `(knot, value)` triples.
    cols: Vec<[(usize, f64); 3]>,
    chol: Option<EnvelopeCholesky>,
}

impl SplineSystem {
    fn new(x: &[f64], p: f64, closing_gap: Option<f64>) -> Self {
        let n = x.len();
        let p = p.clamp(0.0, 1.0);
        let closed = closing_gap.is_some();
        if n < 3 {
            return Self {
                n,
                p,
                closed,
                idx: Vec::new(),
                cols: Vec::new(),
                chol: None,
            };
        }
        let h: Vec<f64> = (0..n)
            .map(|i| {
                if i + 1 < n {
                    x[i + 1] - x[i]
                } else {
                    closing_gap.unwrap_or(0.0)
                }
            })
            .collect();
        // unknown second derivatives live on interior knots (open) or all knots (closed)
        let idx: Vec<usize> = if closed { (0..n).collect() } else { (1..n - 1).collect() };
        let m = idx.len();
        let prev = |i: usize| if i == 0 { n - 1 } else { i - 1 };
        let next = |i: usize| if i + 1 == n { 0 } else { i + 1 };
        // Q columns: (i−1, i, i+1) entries (1/h_{i−1}, −1/h_{i−1} − 1/h_i, 1/h_i)
        let cols: Vec<[(usize, f64); 3]> = idx
            .iter()
            .map(|&i| {
                let (hp, hn) = (h[prev(i)], h[i]);
                [(prev(i), 1.0 / hp), (i, -1.0 / hp - 1.0 / hn), (next(i), 1.0 / hn)]
            })
            .collect();
        let mut sys = Self {
            n,
            p,
            closed,
            idx,
            cols,
            chol: None,
        };
        let mut trip = Vec::new();
        for (a, &i) in sys.idx.iter().enumerate() {
            // p·R
            trip.push((a, a, p * (h[prev(i)] + h[i]) / 3.0));
            let b = if closed { (a + 1) % m } else { a + 1 };
            if b < m && b != a {
                trip.push((a, b, p * h[i] / 6.0));
                trip.push((b, a, p * h[i] / 6.0));
            }
        }
        // (1 − p)·Qᵀ W⁻¹ Q, sparse through shared rows
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (a, col) in sys.cols.iter().enumerate() {
            for &(r, v) in col {
                rows[r].push((a, v));
            }
        }
        for (r, entries) in rows.iter().enumerate() {
            let wi = sys.w_inv(r);
            if wi == 0.0 {
                continue;
            }
            for &(a, va) in entries {
                for &(b, vb) in entries {
                    trip.push((a, b, (1.0 - p) * wi * va * vb));
                }
            }
        }
        let a = SparseMatrix::from_triplets(m, m, &trip)
            .and_then(|a| a.into_symmetric())
            .expect("spline system is finite and symmetric");
        match EnvelopeCholesky::new(&a) {
            Ok(c) => sys.chol = Some(c),
            Err(e) => log::warn!("smoothing spline system is singular ({e}); interpolating instead"),
        }
        sys
    }

    /// Fixed ends carry no data weight on open splines.
    fn w_inv(&self, k: usize) -> f64 {
        if !self.closed && (k == 0 || k == self.n - 1) {
            0.0
        } else {
            1.0
        }
    }

    fn fit(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        assert_eq!(n, y.len());
        if n < 3 {
            return (y.to_vec(), vec![0.0; n]);
        }
        let rhs: Vec<f64> = self
            .cols
            .iter()
            .map(|col| col.iter().map(|&(r, v)| v * y[r]).sum())
            .collect();
        let gt = match &self.chol {
            Some(c) => c.solve(&rhs).expect("dimensions agree"),
            None => vec![0.0; self.idx.len()],
        };
        let mut g = y.to_vec();
        for (a, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                g[r] -= (1.0 - self.p) * self.w_inv(r) * v * gt[a];
            }
        }
        let mut gamma = vec![0.0; n];
        for (a, &i) in self.idx.iter().enumerate() {
            gamma[i] = self.p * gt[a];
        }
        (g, gamma)
    }
}

/// Evaluates the piecewise cubic with knot values `g` and second
/// derivatives `gamma` at parameter `s`.
fn eval(x: &[f64], g: &[f64], gamma: &[f64], period: Option<f64>, s: f64) -> f64 {
    let n = x.len();
    let (i, x0, x1, j) = match period {
        Some(total) => {
            let s = s.rem_euclid(total);
            let i = x.partition_point(|&v| v <= s).saturating_sub(1);
            let x1 = if i + 1 < n { x[i + 1] } else { total };
            (i, x[i], x1, (i + 1) % n)
        }
        None => {
            let i = x.partition_point(|&v| v <= s).saturating_sub(1).min(n - 2);
            (i, x[i], x[i + 1], i + 1)
        }
    };
    let s = match period {
        Some(total) => s.rem_euclid(total),
        None => s,
    };
    let h = x1 - x0;
    let a = (x1 - s) / h;
    let b = (s - x0) / h;
    a * g[i] + b * g[j] - (s - x0) * (x1 - s) / 6.0 * ((1.0 + b) * gamma[j] + (1.0 + a) * gamma[i])
}

/// Smooths a polyline with a chord-length cubic smoothing spline and
/// resamples it at equal arc-length steps (`⌈L/step⌉` segments).
///
/// Endpoints of open lines are kept exactly; closed lines keep their first
/// point. If the result strays farther than `max_deviation` from the
/// input, `p` is moved toward 1 and the fit retried; as a last resort the
/// input polyline itself is resampled. Lines with fewer than four points
/// are returned unchanged.
pub fn smooth_resample(line: &Polyline, opts: &SmoothOptions) -> Polyline {
    if line.len() < 4 {
        log::warn!("polyline with {} points is too short to smooth", line.len());
        return line.clone();
    }
    let step = if opts.step > 0.0 { opts.step } else { 0.5 };
    let index = SegmentIndex::new(line.segments(), vec![0; line.segments().len()]);
    let mut p = opts.p.clamp(0.0, 1.0);
    for _ in 0..12 {
        let out = resample_spline(line, p, step);
        let dev = out.points.iter().map(|q| index.distance(q)).fold(0.0, f64::max);
        if dev <= opts.max_deviation {
            return out;
        }
        if p >= 1.0 {
            break;
        }
        p = 1.0 - (1.0 - p) / 4.0;
        if 1.0 - p < 1e-9 {
            p = 1.0;
        }
    }
    log::debug!(
        "spline deviates beyond {} mm; resampling the raw polyline",
        opts.max_deviation
    );
    resample_linear(line, step)
}

fn chord_params(line: &Polyline) -> (Vec<f64>, Option<f64>) {
    let mut s = vec![0.0];
    for w in line.points.windows(2) {
        s.push(s[s.len() - 1] + (w[1] - w[0]).norm());
    }
    let gap = line
        .closed
        .then(|| (line.points[0] - line.points[line.len() - 1]).norm());
    (s, gap)
}

fn resample_spline(line: &Polyline, p: f64, step: f64) -> Polyline {
    let (x, gap) = chord_params(line);
    let period = gap.map(|g| x[x.len() - 1] + g);
    let system = SplineSystem::new(&x, p, gap);
    let fits: Vec<(Vec<f64>, Vec<f64>)> = (0..3)
        .map(|d| {
            let y: Vec<f64> = line.points.iter().map(|q| q[d]).collect();
            system.fit(&y)
        })
        .collect();
    let curve = |s: f64| -> Vec3 {
        Vec3::new(
            eval(&x, &fits[0].0, &fits[0].1, period, s),
            eval(&x, &fits[1].0, &fits[1].1, period, s),
            eval(&x, &fits[2].0, &fits[2].1, period, s),
        )
    };
    let total = period.unwrap_or(x[x.len() - 1]);
    // dense arc-length table along the spline
    let dense = 16 * line.len();
    let mut ts = Vec::with_capacity(dense + 1);
    let mut arc = Vec::with_capacity(dense + 1);
    let mut prev = curve(0.0);
    let mut acc = 0.0;
    for k in 0..=dense {
        let t = total * k as f64 / dense as f64;
        let q = curve(t);
        acc += (q - prev).norm();
        prev = q;
        ts.push(t);
        arc.push(acc);
    }
    let length = acc;
    let segments = ((length / step).ceil() as usize).max(1);
    let count = if line.closed { segments } else { segments + 1 };
    let mut points = Vec::with_capacity(count);
    let mut params = Vec::with_capacity(count);
    for j in 0..count {
        let target = length * j as f64 / segments as f64;
        let k = arc.partition_point(|&a| a < target).clamp(1, dense);
        let (a0, a1) = (arc[k - 1], arc[k]);
        let f = if a1 > a0 { (target - a0) / (a1 - a0) } else { 0.0 };
        let t = ts[k - 1] + f * (ts[k] - ts[k - 1]);
        params.push(t);
        points.push(curve(t));
    }
    points[0] = line.points[0];
    if !line.closed {
        points[count - 1] = line.points[line.len() - 1];
    }
    let normals = params.iter().map(|&t| normal_at(line, &x, period, t)).collect();
    let mut out = Polyline {
        points,
        normals,
        ..line.clone()
    };
    out.dedup(1e-6);
    out
}

/// Linear interpolation of input normals at chord parameter `t`.
fn normal_at(line: &Polyline, x: &[f64], period: Option<f64>, t: f64) -> Vec3 {
    let n = x.len();
    let t = match period {
        Some(total) => t.rem_euclid(total),
        None => t.clamp(0.0, x[n - 1]),
    };
    let i = x.partition_point(|&v| v <= t).saturating_sub(1).min(n - 1);
    let (j, x1) = if i + 1 < n {
        (i + 1, x[i + 1])
    } else {
        (0, period.unwrap_or(x[i]))
    };
    let h = x1 - x[i];
    let f = if h > 0.0 { ((t - x[i]) / h).clamp(0.0, 1.0) } else { 0.0 };
    let v = line.normals[i] * (1.0 - f) + line.normals[j] * f;
    if v.norm() > 0.0 {
        v.normalize()
    } else {
        line.normals[i]
    }
}

fn resample_linear(line: &Polyline, step: f64) -> Polyline {
    let (x, gap) = chord_params(line);
    let period = gap.map(|g| x[x.len() - 1] + g);
    let total = period.unwrap_or(x[x.len() - 1]);
    let segments = ((total / step).ceil() as usize).max(1);
    let count = if line.closed { segments } else { segments + 1 };
    let at = |t: f64| -> Vec3 {
        let n = x.len();
        let i = x.partition_point(|&v| v <= t).saturating_sub(1).min(n - 1);
        let (j, x1) = if i + 1 < n { (i + 1, x[i + 1]) } else { (0, total) };
        let h = x1 - x[i];
        let f = if h > 0.0 { ((t - x[i]) / h).clamp(0.0, 1.0) } else { 0.0 };
        line.points[i] * (1.0 - f) + line.points[j] * f
    };
    let params: Vec<f64> = (0..count).map(|j| total * j as f64 / segments as f64).collect();
    let mut points: Vec<Vec3> = params.iter().map(|&t| at(t)).collect();
    if !line.closed {
        points[count - 1] = line.points[line.len() - 1];
    }
    let normals = params.iter().map(|&t| normal_at(line, &x, period, t)).collect();
    let mut out = Polyline {
        points,
        normals,
        ..line.clone()
    };
    out.dedup(1e-6);
    out
}
