use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{StressTensorField, SymTensor};
use crate::meshcore::Vec3;

/// Principal values ordered `|σ1| ≥ |σ2| ≥ |σ3|` with unit directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrincipalStress {
    pub values: [f64; 3],
    pub directions: [Vec3; 3],
}

impl PrincipalStress {
    pub fn sigma1(&self) -> f64 {
        self.values[0]
    }

    pub fn sigma3(&self) -> f64 {
        self.values[2]
    }

    /// Maximum principal direction.
    pub fn d1(&self) -> Vec3 {
        self.directions[0]
    }

    /// `Σ σᵢ dᵢdᵢᵀ`.
    pub fn reconstruct(&self) -> SymTensor {
        let mut m = nalgebra::Matrix3::zeros();
        for k in 0..3 {
            m += self.directions[k] * self.directions[k].transpose() * self.values[k];
        }
        SymTensor::from_matrix(&m)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PrincipalStressField {
    pub entries: Vec<PrincipalStress>,
}

impl PrincipalStressField {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `max |σ1|` over all entries.
    pub fn max_abs_sigma1(&self) -> f64 {
        self.entries.iter().map(|e| e.values[0].abs()).fold(0.0, f64::max)
    }
}

pub fn principal_decomposition(field: &StressTensorField) -> PrincipalStressField {
    PrincipalStressField {
        entries: field.tensors.par_iter().map(principal_of).collect(),
    }
}

/// Eigen-decomposition of one tensor by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted by descending magnitude (ties by descending
/// signed value); each direction has its largest-magnitude component
/// positive (ties to the lowest axis).
pub fn principal_of(t: &SymTensor) -> PrincipalStress {
    let mut a = t.to_matrix();
    let mut v = nalgebra::Matrix3::<f64>::identity();
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale > 0.0 {
        for _sweep in 0..64 {
            let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
            if off <= (1e-17 * scale).powi(2) {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let tn = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let tn = if theta == 0.0 { 1.0 } else { tn };
                let c = 1.0 / (tn * tn + 1.0).sqrt();
                let s = tn * c;
                let mut r = nalgebra::Matrix3::<f64>::identity();
                r[(p, p)] = c;
                r[(q, q)] = c;
                r[(p, q)] = s;
                r[(q, p)] = -s;
                a = r.transpose() * a * r;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                v *= r;
            }
        }
    }
    let mut idx = [0usize, 1, 2];
    let ev = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
    idx.sort_by(|&i, &j| {
        ev[j]
            .abs()
            .total_cmp(&ev[i].abs())
            .then(ev[j].total_cmp(&ev[i]))
            .then(i.cmp(&j))
    });
    let values = idx.map(|i| ev[i]);
    let directions = idx.map(|i| canonical_sign(v.column(i).normalize()));
    PrincipalStress { values, directions }
}

fn canonical_sign(d: Vec3) -> Vec3 {
    let mut k = 0;
    for i in 1..3 {
        if d[i].abs() > d[k].abs() {
            k = i;
        }
    }
    if d[k] < 0.0 {
        -d
    } else {
        d
    }
}
