//! Command line front end: runs the pipeline up to a chosen stage, or
//! writes synthetic test meshes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stressline::meshcore::io::write_tet_mesh;
use stressline::meshcore::shapes::{self, BracketParams};
use stressline::meshcore::Vec3;
use stressline::pipeline::{parse_config, run_until, PipelineError, PipelineOutput, Stage};

#[derive(Parser)]
#[command(
    name = "stressline",
    version,
    about = "Stress-aligned non-planar toolpath generation"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the elasticity problem and write nodal stress.
    Fea(RunArgs),
    /// Compute the offset distance field and extract curved slices.
    Slice(RunArgs),
    /// Preprocess the stress flow on every slice.
    Flow(RunArgs),
    /// Generate the toolpath.
    Paths(RunArgs),
    /// Compute alignment and spacing metrics.
    Metrics(RunArgs),
    /// Run every stage.
    Pipeline(RunArgs),
    /// Write a synthetic tet mesh and a matching config.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Bracket,
    Bar,
}

#[derive(Args)]
struct GenerateArgs {
    shape: Shape,
    /// Target element edge length (mm).
    #[arg(long, default_value_t = 1.0)]
    cell: f64,
    /// Directory for `part.node`, `part.ele` and `config.toml`.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Fea(a) => run(&a, Stage::Fea),
        Command::Slice(a) => run(&a, Stage::Slice),
        Command::Flow(a) => run(&a, Stage::Flow),
        Command::Paths(a) => run(&a, Stage::Paths),
        Command::Metrics(a) | Command::Pipeline(a) => run(&a, Stage::Metrics),
        Command::Generate(g) => generate(&g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(args: &RunArgs, last: Stage) -> Result<(), PipelineError> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output = std::env::current_dir()
            .map(|d| d.join(out))
            .unwrap_or_else(|_| out.clone());
    }
    let out = run_until(&cfg, last)?;
    report(&out, &cfg.output_dir());
    Ok(())
}

fn report(out: &PipelineOutput, dir: &Path) {
    let s = &out.summary;
    println!("mesh: {} nodes, {} tets", s.nodes, s.tets);
    if let Some(e) = s.equilibrium_error {
        println!("fea: equilibrium error {e:.2e}");
    }
    if !out.slices.is_empty() {
        println!("slice: {} slices", s.slices);
    }
    if let Some(p) = &out.program {
        println!(
            "paths: {} layers, print {:.1} mm, travel {:.1} mm",
            p.layers.len(),
            p.print_length(),
            p.travel_length()
        );
    }
    for k in &s.skipped {
        println!("skipped layer {} at {}: {}", k.layer, k.stage, k.reason);
    }
    if let Some(m) = &out.metrics {
        if let Some(t) = &m.alignment.trajectory {
            println!("trajectory alignment: {:.4} over {} points", t.mean, t.critical_points);
        }
        for v in &m.alignment.slicing {
            println!("slicing alignment {}: {:.4}", v.variant.name(), v.mean);
        }
        if let Some(sp) = &m.spacing {
            println!("spacing: mean {:.4}, variance {:.3e}", sp.mean, sp.variance);
        }
    }
    for w in &s.warnings {
        println!("warning: {w}");
    }
    if !s.cache_hits.is_empty() {
        let hits: Vec<String> = s.cache_hits.iter().map(|h| h.to_string()).collect();
        println!("cached: {}", hits.join(", "));
    }
    println!("output: {}", dir.display());
}

fn generate(g: &GenerateArgs) -> Result<(), PipelineError> {
    if !(g.cell > 0.0 && g.cell.is_finite()) {
        return Err(PipelineError::Config(format!("cell must be positive, got {}", g.cell)));
    }
    let io = |p: &Path, e: std::io::Error| PipelineError::Io {
        path: p.to_path_buf(),
        source: e,
    };
    std::fs::create_dir_all(&g.out).map_err(|e| io(&g.out, e))?;
    let (mesh, config) = match g.shape {
        Shape::Bracket => {
            let p = BracketParams {
                cell: g.cell,
                ..BracketParams::default()
            };
            let cfg = "base = \"marker:1\"\n\n[mesh]\nnode = \"part.node\"\nele = \"part.ele\"\n\n\
                       [[support]]\nselect = \"marker:3\"\n\n[[load]]\nselect = \"marker:4\"\nforce = [0, 0, -100]\n";
            (shapes::bracket(&p), cfg)
        }
        Shape::Bar => {
            let n = |len: f64| ((len / g.cell).round() as usize).max(1);
            let mesh = shapes::grid_box(Vec3::zeros(), Vec3::new(10.0, 4.0, 1.0), [n(10.0), n(4.0), n(1.0)]);
            let cfg = "base = \"zmin\"\n\n[mesh]\nnode = \"part.node\"\nele = \"part.ele\"\n\n\
                       [[support]]\nselect = \"xmin\"\naxes = \"x\"\n\n[[support]]\nselect = \"ymin\"\naxes = \"y\"\n\n\
                       [[support]]\nselect = \"zmin\"\naxes = \"z\"\n\n[[load]]\nselect = \"xmax\"\nforce = [100, 0, 0]\n";
            (mesh, cfg)
        }
    };
    let (node, ele) = (g.out.join("part.node"), g.out.join("part.ele"));
    write_tet_mesh(&mesh, &node, &ele).map_err(|e| PipelineError::Config(e.to_string()))?;
    let cfg_path = g.out.join("config.toml");
    std::fs::write(&cfg_path, config).map_err(|e| io(&cfg_path, e))?;
    println!(
        "wrote {} nodes, {} tets to {}",
        mesh.vertices.len(),
        mesh.tets.len(),
        g.out.display()
    );
    Ok(())
}
