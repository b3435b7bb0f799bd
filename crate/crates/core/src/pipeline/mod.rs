//! Configuration, stage orchestration with a content-keyed cache, and the
//! toolpath text format.

mod cache;
mod config;
mod run;
mod toolpath;

pub use config::{
    parse_config, parse_config_str, BoxMesh, Config, Load, MeshConfig, MetricsConfig, SolverTolerances, Support,
};
pub use run::{load_mesh, run_pipeline, run_until, LayerFlow, PipelineOutput, RunSummary, SkippedLayer, Stage};
pub use toolpath::{format_toolpath, parse_toolpath, read_toolpath, write_toolpath, ToolpathProgram, TOOLPATH_HEADER};

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("toolpath: {0}")]
    Toolpath(String),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn stage(stage: Stage, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        Self::Stage {
            stage,
            source: source.into(),
        }
    }

    /// Process exit code: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            _ => 1,
        }
    }
}
