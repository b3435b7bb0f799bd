//! Alignment and spacing metrics: slicing alignment `γ̄` per slicing
//! variant, trajectory alignment `β̄`, and the distribution of distances
//! between neighbouring print lines.

mod alignment;
mod compare;
mod report;
mod spacing;

pub use alignment::{trajectory_alignment, trajectory_alignment_with, TrajectoryAlignment};
pub use compare::{compare_slicings, field_alignment, CompareOptions, SlicingVariant, VariantAlignment};
pub use report::{write_histogram_csv, write_report_json, AlignmentReport, MetricsReport};
pub use spacing::{spacing_distribution, spacing_samples, SpacingOptions, SpacingReport, HISTOGRAM_BIN};

use thiserror::Error;

use crate::slicing::SlicingError;
use crate::stressflow::FlowError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no trajectory point lies in a critical region")]
    NoCriticalPoints,
    #[error("spacing needs at least two neighbouring infill lines, found {0}")]
    TooFewLines(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Slicing(#[from] SlicingError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
