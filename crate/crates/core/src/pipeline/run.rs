use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{bytes_key, chain_key, Cache, CACHE_VERSION};
use super::{write_toolpath, Config, PipelineError, ToolpathProgram};
use crate::fea::{
    principal_decomposition, read_stress_csv, solve_elasticity, write_stress_csv, BoundaryConditions, FeaError,
    StressTensorField,
};
use crate::meshcore::io::parse_tet_mesh;
use crate::meshcore::{shapes, TetMesh, Vec3};
use crate::metrics::{
    compare_slicings, field_alignment, spacing_distribution, trajectory_alignment, write_histogram_csv,
    write_report_json, AlignmentReport, CompareOptions, MetricsError, MetricsReport, SlicingVariant, SpacingOptions,
};
use crate::numerics::SolveOptions;
use crate::slicing::{
    extract_slices, geodesic_heat, write_slice_obj, DistanceField, HeatOptions, Slice, SliceOptions, SlicingError,
};
use crate::stressflow::{
    classify_critical, classify_principal, extrapolate_uncritical, project_orthogonal, rectify_with, write_flow_csv,
    CriticalMask, ExtrapolationReport, FlowError, RectifyReport, TangentFlow,
};
use crate::trajopt::{generate_layer, write_layer_svg, LayerOptions, SmoothOptions, TrajError, TrajOptions};

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Mesh,
    Fea,
    Slice,
    Flow,
    Paths,
    Metrics,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Mesh => "mesh",
            Stage::Fea => "fea",
            Stage::Slice => "slice",
            Stage::Flow => "flow",
            Stage::Paths => "paths",
            Stage::Metrics => "metrics",
        })
    }
}

/// Preprocessed flow of one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFlow {
    pub layer: usize,
    pub flow: TangentFlow,
    pub mask: CriticalMask,
    pub rectify: RectifyReport,
    pub extrapolation: ExtrapolationReport,
}

/// A layer left out of the program, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedLayer {
    pub layer: usize,
    pub stage: Stage,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub nodes: usize,
    pub tets: usize,
    pub slices: usize,
    pub layers: usize,
    pub stages: Vec<Stage>,
    pub cache_hits: Vec<Stage>,
    pub skipped: Vec<SkippedLayer>,
    pub warnings: Vec<String>,
    /// `‖R + F‖/‖F‖` of the FEA solve; absent when stress was read from file.
    pub equilibrium_error: Option<f64>,
    /// Wall time per stage (s).
    pub seconds: Vec<(Stage, f64)>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub mesh: TetMesh,
    pub stress: StressTensorField,
    pub distance: Option<DistanceField>,
    pub slices: Vec<Slice>,
    pub flows: Vec<Option<LayerFlow>>,
    pub program: Option<ToolpathProgram>,
    pub metrics: Option<MetricsReport>,
    pub summary: RunSummary,
}

impl PipelineOutput {
    pub fn alignment(&self) -> Option<&AlignmentReport> {
        self.metrics.as_ref().map(|m| &m.alignment)
    }
}

#[derive(Serialize, Deserialize)]
struct FeaOut {
    stress: StressTensorField,
    equilibrium_error: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct SliceOut {
    distance: DistanceField,
    slices: Vec<Slice>,
}

#[derive(Serialize, Deserialize)]
struct FlowOut {
    flows: Vec<Option<LayerFlow>>,
    skipped: Vec<SkippedLayer>,
}

#[derive(Serialize, Deserialize)]
struct PathsOut {
    program: ToolpathProgram,
    skipped: Vec<SkippedLayer>,
}

/// Loads or generates the tet mesh; returns it with a content key.
pub fn load_mesh(cfg: &Config) -> Result<(TetMesh, String), PipelineError> {
    let m = &cfg.mesh;
    let mesh_err = |e| PipelineError::stage(Stage::Mesh, e);
    if let (Some(node), Some(ele)) = (&m.node, &m.ele) {
        let (np, ep) = (cfg.resolve(node), cfg.resolve(ele));
        let nt = std::fs::read_to_string(&np).map_err(|e| PipelineError::io(&np, e))?;
        let et = std::fs::read_to_string(&ep).map_err(|e| PipelineError::io(&ep, e))?;
        let key = chain_key(
            CACHE_VERSION,
            "files",
            &(bytes_key(nt.as_bytes()), bytes_key(et.as_bytes())),
        );
        return Ok((parse_tet_mesh(&nt, &et).map_err(mesh_err)?, key));
    }
    if let Some(b) = &m.bracket {
        return Ok((shapes::bracket(b), chain_key(CACHE_VERSION, "bracket", b)));
    }
    if let Some(b) = &m.grid_box {
        let mesh = shapes::grid_box(Vec3::from(b.min), Vec3::from(b.max), b.cells);
        return Ok((mesh, chain_key(CACHE_VERSION, "box", b)));
    }
    Err(PipelineError::Config("no mesh source configured".into()))
}

fn boundary_conditions(cfg: &Config, mesh: &TetMesh) -> Result<BoundaryConditions, PipelineError> {
    let mut bc = BoundaryConditions::default();
    for s in &cfg.supports {
        s.select
            .validate(mesh)
            .map_err(|e| PipelineError::Config(format!("support: {e}")))?;
        let axes = s.axis_mask().map_err(PipelineError::Config)?;
        for v in s.select.nodes(mesh) {
            bc.fix(v, axes);
        }
    }
    for l in &cfg.loads {
        l.select
            .validate(mesh)
            .map_err(|e| PipelineError::Config(format!("load: {e}")))?;
        let force = Vec3::from(l.force);
        let faces = l.select.faces(mesh);
        if faces.is_empty() {
            let nodes = l.select.nodes(mesh);
            let share = force / nodes.len() as f64;
            for v in nodes {
                bc.load(v, share);
            }
        } else {
            bc.distribute_force(mesh, &faces, force)
                .map_err(|e| PipelineError::Config(format!("load: {e}")))?;
        }
    }
    Ok(bc)
}

fn fea_error(e: FeaError) -> PipelineError {
    match e {
        FeaError::InvalidMaterial(m) | FeaError::InvalidBoundary(m) => PipelineError::Config(m),
        other => PipelineError::stage(Stage::Fea, other),
    }
}

fn traj_options(cfg: &Config) -> TrajOptions {
    TrajOptions {
        spacing: cfg.line_spacing,
        eps: cfg.eps,
        smooth: SmoothOptions {
            p: cfg.spline_p,
            step: cfg.spline_step,
            max_deviation: cfg.max_deviation,
        },
        layer: LayerOptions {
            contour_count: cfg.contour_count,
            travel_lift: cfg.travel_lift,
            min_piece: cfg.min_piece,
        },
        solve: SolveOptions::with_tol(cfg.solver.field),
    }
}

fn heat_options(cfg: &Config) -> HeatOptions {
    HeatOptions {
        time_factor: cfg.heat_time_factor,
        solve: SolveOptions::with_tol(cfg.solver.heat),
        ..HeatOptions::default()
    }
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// Runs every stage and writes all artifacts.
pub fn run_pipeline(cfg: &Config) -> Result<PipelineOutput, PipelineError> {
    run_until(cfg, Stage::Metrics)
}

/// Runs the stages up to and including `last`, reusing cached results
/// where the inputs are unchanged, and writes their artifacts to the
/// output directory.
pub fn run_until(cfg: &Config, last: Stage) -> Result<PipelineOutput, PipelineError> {
    cfg.validate_for_run()?;
    let out = cfg.output_dir();
    ensure_dir(&out)?;
    let cache = Cache::new(cfg.cache.then(|| out.join("cache")));
    let mut summary = RunSummary::default();
    let mut clock = Instant::now();
    let mut lap = |summary: &mut RunSummary, stage: Stage| {
        summary.stages.push(stage);
        summary.seconds.push((stage, clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let (mesh, mesh_key) = load_mesh(cfg)?;
    summary.nodes = mesh.vertices.len();
    summary.tets = mesh.tets.len();
    log::info!("mesh: {} nodes, {} tets", summary.nodes, summary.tets);
    lap(&mut summary, Stage::Mesh);

    // fea
    let fea_key = match &cfg.stress_csv {
        Some(p) => {
            let path = cfg.resolve(p);
            let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
            chain_key(&mesh_key, "stress_csv", &bytes_key(&bytes))
        }
        None => chain_key(
            &mesh_key,
            "fea",
            &(cfg.material(), &cfg.supports, &cfg.loads, cfg.solver.fea),
        ),
    };
    let fea: FeaOut = match cache.load(Stage::Fea, &fea_key) {
        Some(v) => {
            summary.cache_hits.push(Stage::Fea);
            v
        }
        None => {
            let v = match &cfg.stress_csv {
                Some(p) => FeaOut {
                    stress: read_stress_csv(&cfg.resolve(p), mesh.vertices.len()).map_err(fea_error)?,
                    equilibrium_error: None,
                },
                None => {
                    let bc = boundary_conditions(cfg, &mesh)?;
                    let sol = solve_elasticity(&mesh, &cfg.material(), &bc, &SolveOptions::with_tol(cfg.solver.fea))
                        .map_err(fea_error)?;
                    FeaOut {
                        equilibrium_error: Some(sol.equilibrium_error()),
                        stress: sol.stress,
                    }
                }
            };
            cache.store(Stage::Fea, &fea_key, &v)?;
            v
        }
    };
    summary.equilibrium_error = fea.equilibrium_error;
    write_stress_csv(&fea.stress, &out.join("stress.csv")).map_err(fea_error)?;
    let stress = fea.stress;
    lap(&mut summary, Stage::Fea);

    let mut output = PipelineOutput {
        mesh,
        stress,
        distance: None,
        slices: Vec::new(),
        flows: Vec::new(),
        program: None,
        metrics: None,
        summary,
    };
    if last <= Stage::Fea {
        return finish(output, &out);
    }
    let mesh = &output.mesh;
    let stress = &output.stress;

    // slice
    cfg.base
        .validate(mesh)
        .map_err(|e| PipelineError::Config(format!("base: {e}")))?;
    let slice_opts = SliceOptions {
        layer_height: cfg.layer_height,
        collapse_ratio: cfg.collapse_ratio,
    };
    let slice_key = chain_key(&fea_key, "slice", &(&cfg.base, slice_opts, heat_options(cfg)));
    let sliced: SliceOut = match cache.load(Stage::Slice, &slice_key) {
        Some(v) => {
            output.summary.cache_hits.push(Stage::Slice);
            v
        }
        None => {
            let base = cfg.base.nodes(mesh);
            let distance = geodesic_heat(mesh, &base, &heat_options(cfg)).map_err(slice_error)?;
            let slices = extract_slices(mesh, &distance.values, stress, &slice_opts).map_err(slice_error)?;
            let v = SliceOut { distance, slices };
            cache.store(Stage::Slice, &slice_key, &v)?;
            v
        }
    };
    let mut text = String::from("node,distance\n");
    for (i, d) in sliced.distance.values.iter().enumerate() {
        writeln!(text, "{i},{d:e}").unwrap();
    }
    write_text(&out.join("distance.csv"), &text)?;
    if cfg.write_intermediate {
        let dir = out.join("slices");
        ensure_dir(&dir)?;
        for s in &sliced.slices {
            let p = dir.join(format!("slice_{:04}.obj", s.layer));
            write_slice_obj(s, &p).map_err(|e| PipelineError::stage(Stage::Slice, e))?;
        }
    }
    output.summary.slices = sliced.slices.len();
    log::info!("slice: {} slices", sliced.slices.len());
    output.distance = Some(sliced.distance);
    output.slices = sliced.slices;
    lap(&mut output.summary, Stage::Slice);
    if last <= Stage::Slice {
        return finish(output, &out);
    }

    // flow
    let th = cfg.thresholds();
    let max = principal_decomposition(stress).max_abs_sigma1();
    let flow_key = chain_key(&slice_key, "flow", &(th, cfg.rectify_axis, cfg.solver.extrapolation));
    let flowed: FlowOut = match cache.load(Stage::Flow, &flow_key) {
        Some(v) => {
            output.summary.cache_hits.push(Stage::Flow);
            v
        }
        None => {
            let ext = SolveOptions::with_tol(cfg.solver.extrapolation);
            let results: Vec<Result<LayerFlow, FlowError>> = output
                .slices
                .par_iter()
                .map(|s| {
                    let proj = project_orthogonal(s);
                    let (rect, rectify) = rectify_with(&proj, cfg.rectify_axis)?;
                    let mask = classify_critical(s, &th, max)?;
                    let (flow, extrapolation) = extrapolate_uncritical(s, &rect, &mask, &ext)?;
                    Ok(LayerFlow {
                        layer: s.layer,
                        flow,
                        mask,
                        rectify,
                        extrapolation,
                    })
                })
                .collect();
            let mut v = FlowOut {
                flows: Vec::new(),
                skipped: Vec::new(),
            };
            for (s, r) in output.slices.iter().zip(results) {
                match r {
                    Ok(f) => v.flows.push(Some(f)),
                    Err(FlowError::AllInvalid) => {
                        v.flows.push(None);
                        v.skipped.push(SkippedLayer {
                            layer: s.layer,
                            stage: Stage::Flow,
                            reason: FlowError::AllInvalid.to_string(),
                        });
                    }
                    Err(e) => return Err(PipelineError::stage(Stage::Flow, format!("layer {}: {e}", s.layer))),
                }
            }
            cache.store(Stage::Flow, &flow_key, &v)?;
            v
        }
    };
    if cfg.write_intermediate {
        let dir = out.join("flows");
        ensure_dir(&dir)?;
        for f in flowed.flows.iter().flatten() {
            let p = dir.join(format!("flow_{:04}.csv", f.layer));
            write_flow_csv(&[&f.flow], Some(&f.mask), &p).map_err(|e| PipelineError::io(&p, e))?;
        }
    }
    output.summary.skipped.extend(flowed.skipped);
    output.flows = flowed.flows;
    lap(&mut output.summary, Stage::Flow);
    if last <= Stage::Flow {
        return finish(output, &out);
    }

    // paths
    let traj = traj_options(cfg);
    let paths_key = chain_key(&flow_key, "paths", &traj);
    let pathed: PathsOut = match cache.load(Stage::Paths, &paths_key) {
        Some(v) => {
            output.summary.cache_hits.push(Stage::Paths);
            v
        }
        None => {
            let results: Vec<Option<Result<_, TrajError>>> = output
                .slices
                .par_iter()
                .zip(&output.flows)
                .map(|(s, f)| f.as_ref().map(|f| generate_layer(s, &f.flow, &traj)))
                .collect();
            let mut v = PathsOut {
                program: ToolpathProgram::default(),
                skipped: Vec::new(),
            };
            for (s, r) in output.slices.iter().zip(results) {
                let skip = |reason: String| SkippedLayer {
                    layer: s.layer,
                    stage: Stage::Paths,
                    reason,
                };
                match r {
                    None => {}
                    Some(Ok(mut l)) => {
                        l.layer = s.layer;
                        if l.elements.is_empty() {
                            v.skipped.push(skip("no print lines fit the layer".into()));
                        } else {
                            v.program.layers.push(l);
                        }
                    }
                    Some(Err(e @ TrajError::DegenerateField(_))) => v.skipped.push(skip(e.to_string())),
                    Some(Err(e)) => return Err(PipelineError::stage(Stage::Paths, format!("layer {}: {e}", s.layer))),
                }
            }
            cache.store(Stage::Paths, &paths_key, &v)?;
            v
        }
    };
    write_toolpath(&pathed.program, &out.join("toolpath.txt"))?;
    if cfg.write_intermediate {
        let dir = out.join("layers");
        ensure_dir(&dir)?;
        for l in &pathed.program.layers {
            let p = dir.join(format!("layer_{:04}.svg", l.layer));
            write_layer_svg(l, &p).map_err(|e| PipelineError::io(&p, e))?;
        }
    }
    output.summary.layers = pathed.program.layers.len();
    output.summary.skipped.extend(pathed.skipped);
    log::info!(
        "paths: {} layers, {} skipped",
        output.summary.layers,
        output.summary.skipped.len()
    );
    output.program = Some(pathed.program);
    lap(&mut output.summary, Stage::Paths);
    if last <= Stage::Paths {
        return finish(output, &out);
    }

    // metrics
    let program = output.program.as_ref().expect("paths ran");
    let mut report = MetricsReport::default();
    let mut warn = |what: &str, e: MetricsError| {
        log::warn!("{what}: {e}");
        output.summary.warnings.push(format!("{what}: {e}"));
    };
    let node_critical = classify_principal(&principal_decomposition(stress).entries, &th, max)
        .map_err(|e| PipelineError::Config(e.to_string()))?
        .critical;
    match trajectory_alignment(&program.layers, mesh, stress, &node_critical) {
        Ok(a) => report.alignment.trajectory = Some(a),
        Err(e) => warn("trajectory alignment", e),
    }
    let sp = SpacingOptions {
        exclude_end_clamped: cfg.metrics.exclude_end_clamped,
    };
    match spacing_distribution(&program.layers, cfg.line_spacing, &sp) {
        Ok(s) => report.spacing = Some(s),
        Err(e) => warn("spacing", e),
    }
    let copts = CompareOptions {
        slice: SliceOptions {
            layer_height: cfg.metrics.layer_height.unwrap_or(cfg.layer_height),
            collapse_ratio: 0.0,
        },
        thresholds: th,
        heat: heat_options(cfg),
    };
    let distance = output.distance.as_ref().expect("slice ran");
    for &v in &cfg.metrics.variants {
        let r = if v == SlicingVariant::Offset {
            field_alignment(mesh, stress, &distance.values, v, &copts)
        } else {
            compare_slicings(mesh, stress, &[], &[v], &copts).map(|mut r| r.remove(0))
        };
        match r {
            Ok(a) => report.alignment.slicing.push(a),
            Err(e) => warn(&format!("{} slicing alignment", v.name()), e),
        }
    }
    write_report_json(&report, &out.join("metrics.json")).map_err(|e| PipelineError::stage(Stage::Metrics, e))?;
    if let Some(s) = &report.spacing {
        write_histogram_csv(s, &out.join("spacing_histogram.csv"))
            .map_err(|e| PipelineError::stage(Stage::Metrics, e))?;
    }
    output.metrics = Some(report);
    lap(&mut output.summary, Stage::Metrics);
    finish(output, &out)
}

fn slice_error(e: SlicingError) -> PipelineError {
    PipelineError::stage(Stage::Slice, e)
}

fn finish(output: PipelineOutput, out: &Path) -> Result<PipelineOutput, PipelineError> {
    let mut text =
        serde_json::to_string_pretty(&output.summary).map_err(|e| PipelineError::stage(Stage::Metrics, e))?;
    text.push('\n');
    write_text(&out.join("summary.json"), &text)?;
    Ok(output)
}
