use super::{SolveError, SparseMatrix};

/// Cholesky factor `A = L Lᵀ` stored by rows over the envelope of `A`
/// (from the first nonzero column of each row to the diagonal). Fill-in
/// never leaves the envelope, so narrow-band matrices with a few dense
/// border rows (cyclic band systems) factor in linear time and memory.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive definite matrix; reads the lower
    /// triangle only.
    pub fn new(a: &SparseMatrix) -> Result<Self, SolveError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(SolveError::DimensionMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i).0.iter().copied().filter(|&c| c <= i).min().unwrap_or(i))
            .collect();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let fi = first[i];
            let mut r = vec![0.0; i - fi + 1];
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    r[c - fi] += v;
                }
            }
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let rj = &rows[j];
                let mut s = r[j - fi];
                for k in lo..j {
                    s -= r[k - fi] * rj[k - fj];
                }
                r[j - fi] = s / rj[j - fj];
            }
            let d = r[i - fi] - r[..i - fi].iter().map(|v| v * v).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(SolveError::InvalidMatrix(format!(
                    "matrix is not positive definite (pivot {d:.3e} at row {i})"
                )));
            }
            r[i - fi] = d.sqrt();
            rows.push(r);
        }
        Ok(Self { first, rows })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let n = self.rows.len();
        if b.len() != n {
            return Err(SolveError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        // L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let r = &self.rows[i];
            let s: f64 = (fi..i).map(|k| r[k - fi] * y[k]).sum();
            y[i] = (y[i] - s) / r[i - fi];
        }
        // Lᵀ x = y, scattering each finished row
        for i in (0..n).rev() {
            let fi = self.first[i];
            let r = &self.rows[i];
            y[i] /= r[i - fi];
            let xi = y[i];
            for k in fi..i {
                y[k] -= r[k - fi] * xi;
            }
        }
        Ok(y)
    }
}
