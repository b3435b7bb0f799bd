use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::meshcore::spatial::SegmentIndex;
use crate::trajopt::{LayerToolpath, PathKind, Polyline};

/// Histogram bin width of normalized distances.
pub const HISTOGRAM_BIN: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpacingOptions {
    /// Skip samples whose nearest point on the neighbour is that
    /// neighbour's end point (the neighbour ended before this line did).
    pub exclude_end_clamped: bool,
}

impl Default for SpacingOptions {
    fn default() -> Self {
        Self {
            exclude_end_clamped: true,
        }
    }
}

/// Distribution of neighbour distances divided by the nominal spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingReport {
    pub nominal: f64,
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub samples: usize,
    pub bin_width: f64,
    /// Probability mass per bin `[k·w, (k+1)·w)`; sums to 1.
    pub histogram: Vec<f64>,
}

impl SpacingReport {
    pub fn from_samples(samples: &[f64], nominal: f64) -> Result<Self, MetricsError> {
        if samples.is_empty() {
            return Err(MetricsError::TooFewLines(0));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let variance = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        let max = samples.iter().copied().fold(0.0, f64::max);
        let bins = ((max / HISTOGRAM_BIN).floor() as usize) + 1;
        let mut histogram = vec![0.0; bins];
        for &s in samples {
            let b = ((s / HISTOGRAM_BIN).floor().max(0.0) as usize).min(bins - 1);
            histogram[b] += 1.0 / n;
        }
        Ok(Self {
            nominal,
            mean,
            variance,
            samples: samples.len(),
            bin_width: HISTOGRAM_BIN,
            histogram,
        })
    }
}

/// Normalized distances from every infill point to the nearest point of
/// each neighbouring isoline (same region, level index ±1).
pub fn spacing_samples(layer: &LayerToolpath, nominal: f64, opts: &SpacingOptions) -> Result<Vec<f64>, MetricsError> {
    if !(nominal > 0.0) {
        return Err(MetricsError::InvalidArgument(format!(
            "nominal spacing must be positive, got {nominal}"
        )));
    }
    let infill: Vec<&Polyline> = layer.elements.iter().filter(|e| e.kind == PathKind::Infill).collect();
    if infill.len() < 2 {
        return Err(MetricsError::TooFewLines(infill.len()));
    }
    // group pieces by isoline; untagged lines are indexed by order
    let mut groups: BTreeMap<(usize, usize), Vec<&Polyline>> = BTreeMap::new();
    for (i, l) in infill.iter().enumerate() {
        groups
            .entry(l.iso_index.unwrap_or((usize::MAX, i)))
            .or_default()
            .push(l);
    }
    let indices: BTreeMap<(usize, usize), (SegmentIndex, Vec<bool>)> = groups
        .iter()
        .map(|(&key, lines)| {
            let mut segs = Vec::new();
            let mut end_flags = Vec::new();
            let mut tags = Vec::new();
            for l in lines {
                let s = l.segments();
                let m = s.len();
                for (k, seg) in s.into_iter().enumerate() {
                    segs.push(seg);
                    tags.push(end_flags.len());
                    // (first segment, last segment) of an open piece
                    end_flags.push(!l.closed && k == 0);
                    end_flags.push(!l.closed && k + 1 == m);
                }
            }
            let tags = tags.into_iter().collect();
            (key, (SegmentIndex::new(segs, tags), end_flags))
        })
        .collect();
    let mut samples = Vec::new();
    let mut neighbour_pairs = 0;
    for (&(region, k), lines) in &groups {
        let neighbours: Vec<(usize, usize)> = [k.checked_sub(1), k.checked_add(1)]
            .into_iter()
            .flatten()
            .map(|j| (region, j))
            .filter(|key| indices.contains_key(key))
            .collect();
        neighbour_pairs += neighbours.len();
        for l in lines {
            for p in &l.points {
                for key in &neighbours {
                    let (idx, flags) = &indices[key];
                    let Some((seg, d, _, t)) = idx.nearest(p) else { continue };
                    let tag = idx.tags[seg];
                    let clamped = (t <= 0.0 && flags[tag]) || (t >= 1.0 && flags[tag + 1]);
                    if opts.exclude_end_clamped && clamped {
                        continue;
                    }
                    samples.push(d / nominal);
                }
            }
        }
    }
    if neighbour_pairs == 0 {
        return Err(MetricsError::TooFewLines(1));
    }
    Ok(samples)
}

/// Spacing statistics over one or more layers.
pub fn spacing_distribution(
    layers: &[LayerToolpath],
    nominal: f64,
    opts: &SpacingOptions,
) -> Result<SpacingReport, MetricsError> {
    let mut all = Vec::new();
    let mut last_err = None;
    for l in layers {
        match spacing_samples(l, nominal, opts) {
            Ok(s) => all.extend(s),
            Err(e @ MetricsError::TooFewLines(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    if all.is_empty() {
        return Err(last_err.unwrap_or(MetricsError::TooFewLines(0)));
    }
    SpacingReport::from_samples(&all, nominal)
}
