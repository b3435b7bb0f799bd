use serde::{Deserialize, Serialize};

use super::FlowError;
use crate::fea::PrincipalStress;
use crate::meshcore::trimesh_components;
use crate::slicing::Slice;

/// Anisotropy and significance thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum `|σ1|/|σ3|`; must exceed 1.
    pub theta_a: f64,
    /// Minimum `|σ1|/max|σ1|`; must lie in `(0, 1)`.
    pub theta_s: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            theta_a: 3.0,
            theta_s: 0.1,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.theta_a > 1.0 && self.theta_a.is_finite()) {
            return Err(FlowError::InvalidThresholds(format!(
                "theta_a must exceed 1, got {}",
                self.theta_a
            )));
        }
        if !(self.theta_s > 0.0 && self.theta_s < 1.0) {
            return Err(FlowError::InvalidThresholds(format!(
                "theta_s must lie in (0, 1), got {}",
                self.theta_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalMask {
    pub critical: Vec<bool>,
    pub thresholds: Thresholds,
    /// Part-wide `max|σ1|` used for the significance ratio.
    pub max_abs_sigma1: f64,
}

impl CriticalMask {
    pub fn count(&self) -> usize {
        self.critical.iter().filter(|&&c| c).count()
    }
}

/// Critical flags for arbitrary principal-stress samples:
/// `|σ1|/|σ3| > θ_a` (infinite when `σ3 = 0`) and `|σ1|/max > θ_s`.
pub fn classify_principal(
    principal: &[PrincipalStress],
    th: &Thresholds,
    max_abs_sigma1: f64,
) -> Result<CriticalMask, FlowError> {
    th.validate()?;
    let critical = principal
        .iter()
        .map(|p| {
            let s1 = p.values[0].abs();
            let s3 = p.values[2].abs();
            if !(s1 > 0.0) || !(max_abs_sigma1 > 0.0) {
                return false;
            }
            let aniso = if s3 == 0.0 { f64::INFINITY } else { s1 / s3 };
            aniso > th.theta_a && s1 / max_abs_sigma1 > th.theta_s
        })
        .collect();
    Ok(CriticalMask {
        critical,
        thresholds: *th,
        max_abs_sigma1,
    })
}

/// Critical mask of a slice; `max_abs_sigma1` must be the maximum over the
/// whole part, not the slice.
pub fn classify_critical(slice: &Slice, th: &Thresholds, max_abs_sigma1: f64) -> Result<CriticalMask, FlowError> {
    classify_principal(&slice.principal, th, max_abs_sigma1)
}

/// Number of connected critical regions on a slice.
pub fn critical_components(slice: &Slice, mask: &CriticalMask) -> usize {
    let adj = slice.surface.vertex_adjacency();
    trimesh_components(&adj, |v| mask.critical[v]).1
}
