//! Trajectory generation on a slice: a scalar field whose gradient follows
//! the preprocessed flow, its equally spaced isolines, smoothing-spline
//! resampling, contours, trimming and print ordering.

mod export;
mod field;
mod isolines;
mod layer;
mod spline;

pub use export::{write_layer_csv, write_layer_svg};
pub use field::{face_targets, fit_scalar_field, weighted_gradient, ScalarFieldOnSlice};
pub use isolines::extract_isolines;
pub use layer::{build_layer_path, chain_greedy, travel_length, LayerOptions, LayerToolpath};
pub use spline::{smooth_resample, smoothing_spline, SmoothOptions};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meshcore::{MeshError, Vec3};
use crate::numerics::SolveError;
use crate::slicing::Slice;
use crate::stressflow::TangentFlow;

#[derive(Debug, Error)]
pub enum TrajError {
    #[error("degenerate scalar field: {0}")]
    DegenerateField(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("linear solve failed: {0}")]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Infill,
    Contour,
    Travel,
}

impl PathKind {
    pub fn is_print(self) -> bool {
        self != PathKind::Travel
    }
}

/// Ordered points with per-point surface normals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    /// The last point connects back to the first.
    pub closed: bool,
    pub kind: PathKind,
    /// `(connected region, level index)` of the isoline this came from.
    pub iso_index: Option<(usize, usize)>,
}

impl Polyline {
    pub fn new(points: Vec<Vec3>, normals: Vec<Vec3>, closed: bool, kind: PathKind) -> Self {
        assert_eq!(points.len(), normals.len());
        Self {
            points,
            normals,
            closed,
            kind,
            iso_index: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Polyline length, including the closing segment when closed.
    pub fn length(&self) -> f64 {
        let open: f64 = self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if self.closed && self.points.len() > 2 {
            open + (self.points[0] - self.points[self.points.len() - 1]).norm()
        } else {
            open
        }
    }

    pub fn start(&self) -> Vec3 {
        self.points[0]
    }

    /// Where printing of this line ends (the start again when closed).
    pub fn end(&self) -> Vec3 {
        if self.closed {
            self.points[0]
        } else {
            self.points[self.points.len() - 1]
        }
    }

    pub fn reversed(&self) -> Self {
        let mut r = self.clone();
        r.points.reverse();
        r.normals.reverse();
        r
    }

    /// Segments as point pairs, including the closing one.
    pub fn segments(&self) -> Vec<(Vec3, Vec3)> {
        let mut s: Vec<(Vec3, Vec3)> = self.points.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed && self.points.len() > 2 {
            s.push((self.points[self.points.len() - 1], self.points[0]));
        }
        s
    }

    /// Unit tangent at point `i` by central differences (one-sided at open
    /// ends).
    pub fn tangent(&self, i: usize) -> Vec3 {
        let n = self.points.len();
        if n < 2 {
            return Vec3::zeros();
        }
        let (a, b) = if self.closed {
            ((i + n - 1) % n, (i + 1) % n)
        } else {
            (i.saturating_sub(1), (i + 1).min(n - 1))
        };
        let d = self.points[b] - self.points[a];
        let len = d.norm();
        if len > 0.0 {
            d / len
        } else {
            Vec3::zeros()
        }
    }

    /// Drops consecutive points closer than `tol`.
    pub fn dedup(&mut self, tol: f64) {
        let mut pts = Vec::with_capacity(self.points.len());
        let mut nrm = Vec::with_capacity(self.points.len());
        for (p, n) in self.points.iter().zip(&self.normals) {
            if pts.last().is_none_or(|q: &Vec3| (p - q).norm() > tol) {
                pts.push(*p);
                nrm.push(*n);
            }
        }
        if self.closed && pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() <= tol {
            pts.pop();
            nrm.pop();
        }
        self.points = pts;
        self.normals = nrm;
    }
}

/// All trajopt parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajOptions {
    /// Isoline spacing (mm).
    pub spacing: f64,
    /// Ridge weight; `None` uses [`crate::numerics::default_epsilon`].
    pub eps: Option<f64>,
    pub smooth: SmoothOptions,
    pub layer: LayerOptions,
    pub solve: crate::numerics::SolveOptions,
}

impl Default for TrajOptions {
    fn default() -> Self {
        Self {
            spacing: 0.4,
            eps: None,
            smooth: SmoothOptions::default(),
            layer: LayerOptions::default(),
            solve: crate::numerics::SolveOptions::with_tol(1e-10),
        }
    }
}

/// Full per-slice chain: field fit, isolines, smoothing, layer assembly.
pub fn generate_layer(slice: &Slice, flow: &TangentFlow, opts: &TrajOptions) -> Result<LayerToolpath, TrajError> {
    let field = fit_scalar_field(slice, flow, opts.eps, &opts.solve)?;
    let lines = extract_isolines(slice, &field, opts.spacing)?;
    let smoothed: Vec<Polyline> = lines.iter().map(|l| smooth_resample(l, &opts.smooth)).collect();
    build_layer_path(&smoothed, slice, opts.spacing, &opts.layer)
}
