use serde::{Deserialize, Serialize};

use super::{Slice, SlicingError};

/// Slicing stress alignment `γ = ‖f × n‖` over critical slice vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceAlignment {
    /// Mean over all critical vertices of all slices.
    pub mean: f64,
    /// Per-slice mean, `None` where a slice has no critical vertex.
    pub per_slice: Vec<Option<f64>>,
    pub critical_count: usize,
}

/// `γ̄` over the critical vertices given by `masks` (one per slice).
pub fn slicing_alignment(slices: &[Slice], masks: &[Vec<bool>]) -> Result<SliceAlignment, SlicingError> {
    if masks.len() != slices.len() {
        return Err(SlicingError::InvalidArgument(format!(
            "{} masks for {} slices",
            masks.len(),
            slices.len()
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    let mut per_slice = Vec::with_capacity(slices.len());
    for (s, mask) in slices.iter().zip(masks) {
        if mask.len() != s.vertex_count() {
            return Err(SlicingError::InvalidArgument(format!(
                "mask length mismatch on layer {}",
                s.layer
            )));
        }
        let mut sum = 0.0;
        let mut c = 0usize;
        for (v, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            sum += s.principal[v].d1().cross(&s.normals[v]).norm().min(1.0);
            c += 1;
        }
        per_slice.push((c > 0).then(|| sum / c as f64));
        total += sum;
        count += c;
    }
    if count == 0 {
        return Err(SlicingError::NoCriticalNodes);
    }
    Ok(SliceAlignment {
        mean: total / count as f64,
        per_slice,
        critical_count: count,
    })
}
