use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MetricsError, SpacingReport, TrajectoryAlignment, VariantAlignment};

/// Alignment of the slicing variants and of the final trajectories.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub slicing: Vec<VariantAlignment>,
    pub trajectory: Option<TrajectoryAlignment>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub alignment: AlignmentReport,
    pub spacing: Option<SpacingReport>,
}

pub fn write_report_json<T: Serialize>(report: &T, path: &Path) -> Result<(), MetricsError> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Histogram as `bin_lo,bin_hi,mass` rows.
pub fn write_histogram_csv(report: &SpacingReport, path: &Path) -> Result<(), MetricsError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "bin_lo,bin_hi,mass")?;
    for (k, m) in report.histogram.iter().enumerate() {
        let lo = k as f64 * report.bin_width;
        writeln!(out, "{:.4},{:.4},{:e}", lo, lo + report.bin_width, m)?;
    }
    out.flush()?;
    Ok(())
}
