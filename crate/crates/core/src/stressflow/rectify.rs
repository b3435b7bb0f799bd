use serde::{Deserialize, Serialize};

use super::{FlowError, FlowStage, TangentFlow};
use crate::meshcore::Vec3;

/// Reference axis for orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RectifyAxis {
    /// Cartesian axis with the largest aggregate alignment `Σ|f·eᵢ|`.
    #[default]
    Cartesian,
    /// Dominant eigenvector of `Σ f fᵀ` over the slice.
    Pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectifyReport {
    pub axis: Vec3,
    /// Cartesian index when [`RectifyAxis::Cartesian`] was used.
    pub axis_index: Option<usize>,
    pub scores: [f64; 3],
    /// The top two Cartesian scores differ by less than 10%.
    pub ambiguous: bool,
}

/// Orients every valid vector along the dominant Cartesian axis.
pub fn rectify(flow: &TangentFlow) -> Result<TangentFlow, FlowError> {
    rectify_with(flow, RectifyAxis::Cartesian).map(|(f, _)| f)
}

/// Flips each vector so that `f·a ≥ 0` for the reference axis `a`. A
/// vector exactly orthogonal to `a` is oriented by its first nonzero
/// component along the remaining Cartesian axes, so the result depends
/// only on the line through each vector: `rectify(−F) = rectify(F)`.
pub fn rectify_with(flow: &TangentFlow, mode: RectifyAxis) -> Result<(TangentFlow, RectifyReport), FlowError> {
    if flow.stage > FlowStage::Rectified {
        return Err(FlowError::WrongStage {
            expected: FlowStage::Rectified,
            found: flow.stage,
        });
    }
    if !flow.valid.iter().any(|&v| v) {
        return Err(FlowError::AllInvalid);
    }
    let mut scores = [0.0; 3];
    for (f, _) in flow.vectors.iter().zip(&flow.valid).filter(|(_, &ok)| ok) {
        for i in 0..3 {
            scores[i] += f[i].abs();
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    let mut sorted = scores;
    sorted.sort_by(|a, b| b.total_cmp(a));
    let ambiguous = sorted[0] - sorted[1] < 0.1 * sorted[0];

    let (axis, axis_index) = match mode {
        RectifyAxis::Cartesian => (Vec3::ith(best, 1.0), Some(best)),
        RectifyAxis::Pca => {
            let mut m = nalgebra::Matrix3::<f64>::zeros();
            for (f, _) in flow.vectors.iter().zip(&flow.valid).filter(|(_, &ok)| ok) {
                m += f * f.transpose();
            }
            let eig = m.symmetric_eigen();
            let k = eig.eigenvalues.imax();
            let a: Vec3 = eig.eigenvectors.column(k).into_owned();
            (canonical(a), None)
        }
    };
    let vectors = flow
        .vectors
        .iter()
        .zip(&flow.valid)
        .map(|(f, &ok)| {
            if ok && orient_sign(f, &axis, best) < 0.0 {
                -f
            } else {
                *f
            }
        })
        .collect();
    Ok((
        TangentFlow {
            stage: FlowStage::Rectified,
            vectors,
            valid: flow.valid.clone(),
        },
        RectifyReport {
            axis,
            axis_index,
            scores,
            ambiguous,
        },
    ))
}

/// Sign deciding orientation: `f·axis`, or if that is zero the first
/// nonzero component after `start` in cyclic axis order.
fn orient_sign(f: &Vec3, axis: &Vec3, start: usize) -> f64 {
    let d = f.dot(axis);
    if d != 0.0 {
        return d;
    }
    (1..=3).map(|k| f[(start + k) % 3]).find(|&c| c != 0.0).unwrap_or(0.0)
}

fn canonical(a: Vec3) -> Vec3 {
    let k = a.iamax();
    if a[k] < 0.0 {
        -a
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(v: Vec<Vec3>) -> TangentFlow {
        let n = v.len();
        TangentFlow {
            stage: FlowStage::ProjectedOrthogonal,
            vectors: v,
            valid: vec![true; n],
        }
    }

    #[test]
    fn antipodal_pair() {
        let r = rectify(&flow(vec![Vec3::x(), -Vec3::x()])).unwrap();
        assert_eq!(r.vectors, vec![Vec3::x(), Vec3::x()]);
    }

    #[test]
    fn consistent_field_unchanged() {
        let v = vec![Vec3::new(1.0, 0.2, 0.0), Vec3::new(0.9, -0.3, 0.1)];
        let r = rectify(&flow(v.clone())).unwrap();
        assert_eq!(r.vectors, v);
    }

    #[test]
    fn orthogonal_vector_tie_break() {
        let f = flow(vec![Vec3::x(), Vec3::x(), Vec3::new(0.0, -1.0, 0.0)]);
        let neg = flow(f.vectors.iter().map(|v| -v).collect());
        let a = rectify(&f).unwrap();
        assert_eq!(a, rectify(&neg).unwrap());
        assert_eq!(a.vectors[2], Vec3::y());
    }

    #[test]
    fn pca_axis_and_ambiguity() {
        let d = Vec3::new(1.0, 1.0, 0.0).normalize();
        let f = flow(vec![d, -d, d]);
        let (r, rep) = rectify_with(&f, RectifyAxis::Pca).unwrap();
        assert!(rep.ambiguous);
        assert!(r.vectors.iter().all(|v| (v - d).norm() < 1e-12));
    }

    #[test]
    fn all_invalid_errors() {
        let mut f = flow(vec![Vec3::x()]);
        f.valid[0] = false;
        assert!(matches!(rectify(&f), Err(FlowError::AllInvalid)));
    }
}
