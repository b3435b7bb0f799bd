use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::fea::{principal_decomposition, StressTensorField};
use crate::meshcore::TetMesh;
use crate::slicing::{extract_slices, geodesic_heat, slicing_alignment, HeatOptions, SliceOptions};
use crate::stressflow::{classify_critical, Thresholds};

/// Slicing strategies compared by `γ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlicingVariant {
    /// Geodesic offsets from the base.
    Offset,
    PlanarX,
    PlanarY,
    PlanarZ,
}

impl SlicingVariant {
    pub const ALL: [SlicingVariant; 4] = [Self::Offset, Self::PlanarX, Self::PlanarY, Self::PlanarZ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Offset => "offset",
            Self::PlanarX => "planar_x",
            Self::PlanarY => "planar_y",
            Self::PlanarZ => "planar_z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareOptions {
    pub slice: SliceOptions,
    pub thresholds: Thresholds,
    pub heat: HeatOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantAlignment {
    pub variant: SlicingVariant,
    /// `γ̄` over critical slice vertices.
    pub mean: f64,
    pub per_slice: Vec<Option<f64>>,
    pub critical_count: usize,
    pub slice_count: usize,
}

/// `γ̄` of the slices of `phi`, with criticality judged against the
/// part-wide `max|σ1|`.
pub fn field_alignment(
    mesh: &TetMesh,
    stress: &StressTensorField,
    phi: &[f64],
    variant: SlicingVariant,
    opts: &CompareOptions,
) -> Result<VariantAlignment, MetricsError> {
    let max = principal_decomposition(stress).max_abs_sigma1();
    let slices = extract_slices(mesh, phi, stress, &opts.slice)?;
    let masks = slices
        .iter()
        .map(|s| classify_critical(s, &opts.thresholds, max).map(|m| m.critical))
        .collect::<Result<Vec<_>, _>>()?;
    let a = slicing_alignment(&slices, &masks)?;
    Ok(VariantAlignment {
        variant,
        mean: a.mean,
        per_slice: a.per_slice,
        critical_count: a.critical_count,
        slice_count: slices.len(),
    })
}

/// `γ̄` per variant. Planar variants slice `coordinate − min`; the offset
/// variant slices the geodesic distance from `base`.
pub fn compare_slicings(
    mesh: &TetMesh,
    stress: &StressTensorField,
    base: &[usize],
    variants: &[SlicingVariant],
    opts: &CompareOptions,
) -> Result<Vec<VariantAlignment>, MetricsError> {
    opts.thresholds.validate()?;
    variants
        .iter()
        .map(|&v| {
            let phi = match v {
                SlicingVariant::Offset => geodesic_heat(mesh, base, &opts.heat)?.values,
                SlicingVariant::PlanarX => planar(mesh, 0),
                SlicingVariant::PlanarY => planar(mesh, 1),
                SlicingVariant::PlanarZ => planar(mesh, 2),
            };
            field_alignment(mesh, stress, &phi, v, opts)
        })
        .collect()
}

fn planar(mesh: &TetMesh, axis: usize) -> Vec<f64> {
    let lo = mesh.vertices.iter().map(|v| v[axis]).fold(f64::INFINITY, f64::min);
    mesh.vertices.iter().map(|v| v[axis] - lo).collect()
}
