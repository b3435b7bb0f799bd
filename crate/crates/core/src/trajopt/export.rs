use std::io::Write;
use std::path::Path;

use super::{LayerToolpath, PathKind};
use crate::meshcore::Vec3;

fn kind_name(k: PathKind) -> &'static str {
    match k {
        PathKind::Infill => "infill",
        PathKind::Contour => "contour",
        PathKind::Travel => "travel",
    }
}

/// One row per point: element index, kind, position and normal.
pub fn write_layer_csv(layer: &LayerToolpath, path: &Path) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "element,kind,x,y,z,nx,ny,nz")?;
    for (i, e) in layer.elements.iter().enumerate() {
        for (p, n) in e.points.iter().zip(&e.normals) {
            writeln!(
                out,
                "{i},{},{},{},{},{},{},{}",
                kind_name(e.kind),
                p.x,
                p.y,
                p.z,
                n.x,
                n.y,
                n.z
            )?;
        }
    }
    out.flush()
}

/// Orthographic view along the coordinate axis closest to the mean
/// normal. Infill black, contours blue, travel red.
pub fn write_layer_svg(layer: &LayerToolpath, path: &Path) -> std::io::Result<()> {
    let mean = layer
        .elements
        .iter()
        .flat_map(|e| e.normals.iter())
        .fold(Vec3::zeros(), |a, n| a + n.abs());
    let drop = mean.imax();
    let (u, v) = match drop {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let pts = layer.elements.iter().flat_map(|e| e.points.iter());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        lo = [lo[0].min(p[u]), lo[1].min(p[v])];
        hi = [hi[0].max(p[u]), hi[1].max(p[v])];
    }
    if !lo[0].is_finite() {
        lo = [0.0; 2];
        hi = [1.0; 2];
    }
    let margin = 1.0;
    let (w, h) = (hi[0] - lo[0] + 2.0 * margin, hi[1] - lo[1] + 2.0 * margin);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w:.4} {h:.4}" width="{:.0}mm" height="{:.0}mm">"#,
        w, h
    )?;
    for e in &layer.elements {
        let color = match e.kind {
            PathKind::Infill => "black",
            PathKind::Contour => "blue",
            PathKind::Travel => "red",
        };
        let mut d = String::new();
        for p in &e.points {
            let x = p[u] - lo[0] + margin;
            let y = hi[1] - p[v] + margin;
            d.push_str(&format!("{x:.4},{y:.4} "));
        }
        let tag = if e.closed { "polygon" } else { "polyline" };
        writeln!(
            out,
            r#"  <{tag} points="{}" fill="none" stroke="{color}" stroke-width="0.08"/>"#,
            d.trim_end()
        )?;
    }
    writeln!(out, "</svg>")?;
    out.flush()
}
