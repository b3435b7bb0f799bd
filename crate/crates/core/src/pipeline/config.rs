use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::fea::Material;
use crate::meshcore::shapes::BracketParams;
use crate::meshcore::Selector;
use crate::metrics::SlicingVariant;
use crate::stressflow::{RectifyAxis, Thresholds};

/// Where the tet mesh comes from: a `.node`/`.ele` pair or a synthetic
/// generator. Exactly one source must be given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub node: Option<PathBuf>,
    pub ele: Option<PathBuf>,
    pub bracket: Option<BracketParams>,
    #[serde(rename = "box")]
    pub grid_box: Option<BoxMesh>,
}

/// Axis-aligned box split into `cells` hexahedra of six tets each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxMesh {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub cells: [usize; 3],
}

/// Zero-displacement constraint on the selected nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Support {
    pub select: Selector,
    /// Constrained axes, a non-empty subset of `"xyz"`.
    #[serde(default = "all_axes")]
    pub axes: String,
}

fn all_axes() -> String {
    "xyz".into()
}

impl Support {
    pub fn axis_mask(&self) -> Result<[bool; 3], String> {
        let mut m = [false; 3];
        for c in self.axes.chars() {
            match c {
                'x' => m[0] = true,
                'y' => m[1] = true,
                'z' => m[2] = true,
                _ => return Err(format!("support axes {:?} may only contain x, y and z", self.axes)),
            }
        }
        if m == [false; 3] {
            return Err("support axes must not be empty".into());
        }
        Ok(m)
    }
}

/// Total force (N) spread as a uniform traction over the selected
/// boundary faces, or evenly over the nodes when no face is selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub select: Selector,
    pub force: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverTolerances {
    pub fea: f64,
    pub heat: f64,
    pub extrapolation: f64,
    pub field: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            fea: 1e-10,
            heat: 1e-13,
            extrapolation: 1e-10,
            field: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Slicing variants scored by `γ̄`; empty disables the comparison.
    pub variants: Vec<SlicingVariant>,
    /// Layer height of the comparison slicings; defaults to `layer_height`.
    pub layer_height: Option<f64>,
    /// See [`crate::metrics::SpacingOptions`].
    pub exclude_end_clamped: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            variants: SlicingVariant::ALL.to_vec(),
            layer_height: None,
            exclude_end_clamped: true,
        }
    }
}

/// Full pipeline configuration, read from TOML. Unspecified keys take
/// their defaults; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub mesh: MeshConfig,
    /// Boundary region the offset slicing grows from.
    pub base: Selector,
    /// Young's modulus (N/mm²).
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    #[serde(rename = "support")]
    pub supports: Vec<Support>,
    #[serde(rename = "load")]
    pub loads: Vec<Load>,
    /// Precomputed nodal stress; replaces the FEA stage when set.
    pub stress_csv: Option<PathBuf>,
    pub theta_a: f64,
    pub theta_s: f64,
    /// mm.
    pub layer_height: f64,
    /// mm.
    pub line_spacing: f64,
    pub contour_count: usize,
    /// Smoothing-spline parameter `p`.
    pub spline_p: f64,
    /// Resampling step of smoothed lines (mm).
    pub spline_step: f64,
    /// Largest allowed distance between a smoothed line and its isoline (mm).
    pub max_deviation: f64,
    /// Ridge weight of the scalar-field fit; unset picks a scale-aware default.
    pub eps: Option<f64>,
    pub travel_lift: f64,
    pub min_piece: f64,
    pub collapse_ratio: f64,
    pub rectify_axis: RectifyAxis,
    pub heat_time_factor: f64,
    pub solver: SolverTolerances,
    pub metrics: MetricsConfig,
    pub output: PathBuf,
    /// Reuse stage results stored under `<output>/cache`.
    pub cache: bool,
    /// Write per-slice OBJ/CSV and per-layer SVG files.
    pub write_intermediate: bool,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub root: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            mesh: MeshConfig::default(),
            base: Selector::Extreme { axis: 2, max: false },
            young_modulus: Material::default().young_modulus,
            poisson_ratio: 0.3,
            supports: Vec::new(),
            loads: Vec::new(),
            stress_csv: None,
            theta_a: 3.0,
            theta_s: 0.1,
            layer_height: 0.1,
            line_spacing: 0.4,
            contour_count: 2,
            spline_p: 0.95,
            spline_step: 0.5,
            max_deviation: 0.1,
            eps: None,
            travel_lift: 0.1,
            min_piece: 0.5,
            collapse_ratio: 0.0,
            rectify_axis: RectifyAxis::Cartesian,
            heat_time_factor: 1.0,
            solver: SolverTolerances::default(),
            metrics: MetricsConfig::default(),
            output: PathBuf::from("out"),
            cache: true,
            write_intermediate: true,
            root: PathBuf::from("."),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

impl Config {
    pub fn material(&self) -> Material {
        Material {
            young_modulus: self.young_modulus,
            poisson_ratio: self.poisson_ratio,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            theta_a: self.theta_a,
            theta_s: self.theta_s,
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output)
    }

    /// Range checks that need no mesh.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.check().map_err(PipelineError::Config)
    }

    fn check(&self) -> Result<(), String> {
        self.material().validate().map_err(|e| e.to_string())?;
        self.thresholds().validate().map_err(|e| e.to_string())?;
        positive("layer_height", self.layer_height)?;
        positive("line_spacing", self.line_spacing)?;
        positive("spline_step", self.spline_step)?;
        positive("max_deviation", self.max_deviation)?;
        positive("heat_time_factor", self.heat_time_factor)?;
        positive("solver.fea", self.solver.fea)?;
        positive("solver.heat", self.solver.heat)?;
        positive("solver.extrapolation", self.solver.extrapolation)?;
        positive("solver.field", self.solver.field)?;
        if let Some(h) = self.metrics.layer_height {
            positive("metrics.layer_height", h)?;
        }
        if !(self.spline_p > 0.0 && self.spline_p <= 1.0) {
            return Err(format!("spline_p must lie in (0, 1], got {}", self.spline_p));
        }
        if let Some(e) = self.eps {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(format!("eps must be finite and non-negative, got {e}"));
            }
        }
        if !(self.travel_lift >= 0.0 && self.travel_lift.is_finite()) {
            return Err(format!("travel_lift must be non-negative, got {}", self.travel_lift));
        }
        if !(self.min_piece >= 0.0 && self.min_piece.is_finite()) {
            return Err(format!("min_piece must be non-negative, got {}", self.min_piece));
        }
        if !(self.collapse_ratio >= 0.0 && self.collapse_ratio < 1.0) {
            return Err(format!(
                "collapse_ratio must lie in [0, 1), got {}",
                self.collapse_ratio
            ));
        }
        for s in &self.supports {
            s.axis_mask()?;
        }
        for l in &self.loads {
            if l.force.iter().any(|f| !f.is_finite()) {
                return Err(format!("load on {} has a non-finite force", l.select));
            }
        }
        if let Some(b) = &self.mesh.bracket {
            for (n, v) in [
                ("arm_length", b.arm_length),
                ("outer_radius", b.outer_radius),
                ("upright_length", b.upright_length),
                ("thickness", b.thickness),
                ("width", b.width),
                ("cell", b.cell),
            ] {
                positive(&format!("mesh.bracket.{n}"), v)?;
            }
        }
        if let Some(b) = &self.mesh.grid_box {
            if (0..3).any(|k| !(b.max[k] > b.min[k]) || b.cells[k] == 0) {
                return Err("mesh.box needs max > min and at least one cell per axis".into());
            }
        }
        Ok(())
    }

    /// Checks needed before running: one mesh source and, without a
    /// stress file, at least one support and one load.
    pub fn validate_for_run(&self) -> Result<(), PipelineError> {
        self.validate()?;
        let m = &self.mesh;
        let files = match (&m.node, &m.ele) {
            (Some(_), Some(_)) => 1,
            (None, None) => 0,
            _ => {
                return Err(PipelineError::Config(
                    "mesh.node and mesh.ele must be given together".into(),
                ))
            }
        };
        let sources = files + m.bracket.is_some() as usize + m.grid_box.is_some() as usize;
        if sources != 1 {
            return Err(PipelineError::Config(format!(
                "exactly one mesh source (node/ele, bracket or box) is required, found {sources}"
            )));
        }
        if self.stress_csv.is_none() && (self.supports.is_empty() || self.loads.is_empty()) {
            return Err(PipelineError::Config(
                "without stress_csv the config needs at least one [[support]] and one [[load]]".into(),
            ));
        }
        Ok(())
    }
}

/// Parses TOML text; relative paths resolve against `root`.
pub fn parse_config_str(text: &str, root: &Path) -> Result<Config, PipelineError> {
    let mut cfg: Config = toml::from_str(text)
        .map_err(|e| PipelineError::Config(e.message().to_string() + &span_note(text, e.span())))?;
    cfg.root = root.to_path_buf();
    cfg.validate()?;
    Ok(cfg)
}

fn span_note(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

/// Reads a TOML config; relative paths resolve against its directory.
pub fn parse_config(path: &Path) -> Result<Config, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &root)
}
