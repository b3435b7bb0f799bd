use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::meshcore::Vec3;
use crate::trajopt::{LayerToolpath, PathKind, Polyline};

pub const TOOLPATH_HEADER: &str = "# stressline toolpath v1";

/// Ordered layers of print and travel moves, ready for a 5-axis machine.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ToolpathProgram {
    pub layers: Vec<LayerToolpath>,
}

impl ToolpathProgram {
    /// Layers ordered by non-decreasing iso-value and every point and
    /// normal finite.
    pub fn validate(&self) -> Result<(), String> {
        for w in self.layers.windows(2) {
            if !(w[0].iso <= w[1].iso) {
                return Err(format!("layer {} is out of order", w[1].layer));
            }
        }
        for l in &self.layers {
            for e in &l.elements {
                let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
                if !e.points.iter().chain(&e.normals).all(finite) {
                    return Err(format!("layer {} has a non-finite record", l.layer));
                }
            }
        }
        Ok(())
    }

    pub fn print_length(&self) -> f64 {
        self.layers.iter().map(|l| l.print_length).sum()
    }

    pub fn travel_length(&self) -> f64 {
        self.layers.iter().map(|l| l.travel_length).sum()
    }
}

fn fixed6(out: &mut String, v: f64) {
    let start = out.len();
    write!(out, "{v:.6}").unwrap();
    // rounding a tiny negative value prints "-0.000000"
    if out[start..]
        .trim_start_matches('-')
        .bytes()
        .all(|b| b == b'0' || b == b'.')
        && out[start..].starts_with('-')
    {
        out.remove(start);
    }
}

/// Text form: a header line, then `LAYER k` followed by one
/// `<PRINT|TRAVEL> x y z nx ny nz` record per point, six decimals, LF line
/// endings. Closed polylines repeat their first point at the end.
pub fn format_toolpath(program: &ToolpathProgram) -> Result<String, PipelineError> {
    program.validate().map_err(PipelineError::Toolpath)?;
    let mut out = String::with_capacity(64 * 1024);
    out.push_str(TOOLPATH_HEADER);
    out.push('\n');
    for layer in &program.layers {
        writeln!(out, "LAYER {}", layer.layer).unwrap();
        for e in &layer.elements {
            let kind = if e.kind.is_print() { "PRINT" } else { "TRAVEL" };
            let closing = e.closed.then_some(0);
            for i in (0..e.points.len()).chain(closing) {
                out.push_str(kind);
                let (p, n) = (e.points[i], e.normals[i]);
                for v in [p.x, p.y, p.z, n.x, n.y, n.z] {
                    out.push(' ');
                    fixed6(&mut out, v);
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn write_toolpath(program: &ToolpathProgram, path: &Path) -> Result<(), PipelineError> {
    let text = format_toolpath(program)?;
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// Reads the text form back. Consecutive records of one kind form one
/// polyline; print lines come back as open infill polylines (a closed
/// polyline keeps its repeated end point) and `iso` is set to the layer
/// number.
pub fn parse_toolpath(text: &str) -> Result<ToolpathProgram, PipelineError> {
    let err = |line: usize, m: String| PipelineError::Toolpath(format!("line {line}: {m}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == TOOLPATH_HEADER => {}
        _ => return Err(err(1, format!("expected header {TOOLPATH_HEADER:?}"))),
    }
    let mut layers: Vec<LayerToolpath> = Vec::new();
    let mut current: Option<(PathKind, Vec<Vec3>, Vec<Vec3>)> = None;
    let flush = |layers: &mut Vec<LayerToolpath>, cur: &mut Option<(PathKind, Vec<Vec3>, Vec<Vec3>)>| {
        if let Some((kind, pts, nrm)) = cur.take() {
            let layer = layers.last_mut().expect("records follow a LAYER line");
            layer.elements.push(Polyline::new(pts, nrm, false, kind));
        }
    };
    for (i, raw) in lines {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let kind = match tok.next().unwrap() {
            "LAYER" => {
                flush(&mut layers, &mut current);
                let k: usize = tok
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(ln, "LAYER needs an index".into()))?;
                layers.push(LayerToolpath {
                    layer: k,
                    iso: k as f64,
                    elements: Vec::new(),
                    print_length: 0.0,
                    travel_length: 0.0,
                });
                continue;
            }
            "PRINT" => PathKind::Infill,
            "TRAVEL" => PathKind::Travel,
            other => return Err(err(ln, format!("unknown record {other:?}"))),
        };
        if layers.is_empty() {
            return Err(err(ln, "record before the first LAYER".into()));
        }
        let vals: Vec<f64> = tok
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| err(ln, e.to_string()))?;
        if vals.len() != 6 || vals.iter().any(|v| !v.is_finite()) {
            return Err(err(ln, "expected six finite numbers".into()));
        }
        let p = Vec3::new(vals[0], vals[1], vals[2]);
        let n = Vec3::new(vals[3], vals[4], vals[5]);
        match &mut current {
            Some((k, pts, nrm)) if *k == kind => {
                pts.push(p);
                nrm.push(n);
            }
            _ => {
                flush(&mut layers, &mut current);
                current = Some((kind, vec![p], vec![n]));
            }
        }
    }
    flush(&mut layers, &mut current);
    for l in &mut layers {
        l.print_length = l.prints().map(Polyline::length).sum();
        l.travel_length = l
            .elements
            .iter()
            .filter(|e| e.kind == PathKind::Travel)
            .map(Polyline::length)
            .sum();
    }
    Ok(ToolpathProgram { layers })
}

pub fn read_toolpath(path: &Path) -> Result<ToolpathProgram, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    parse_toolpath(&text)
}
