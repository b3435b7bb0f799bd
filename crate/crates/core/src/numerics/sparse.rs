use rayon::prelude::*;

use super::SolveError;

const PAR_ROWS: usize = 4096;

/// Compressed sparse row matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate entries
    /// are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, SolveError> {
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(SolveError::InvalidMatrix(format!(
                    "entry ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
            if !v.is_finite() {
                return Err(SolveError::InvalidMatrix(format!("non-finite entry at ({r}, {c})")));
            }
        }
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut order = vec![0usize; triplets.len()];
        let mut next = counts.clone();
        for (k, &(r, _, _)) in triplets.iter().enumerate() {
            order[next[r]] = k;
            next[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row_buf: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row_buf.clear();
            row_buf.extend(
                order[counts[r]..counts[r + 1]]
                    .iter()
                    .map(|&k| (triplets[k].1, triplets[k].2)),
            );
            // stable sort keeps summation order deterministic
            row_buf.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row_buf.len() {
                let c = row_buf[i].0;
                let mut v = 0.0;
                while i < row_buf.len() && row_buf[i].0 == c {
                    v += row_buf[i].1;
                    i += 1;
                }
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
            symmetric: false,
        })
    }

    /// Like [`SparseMatrix::from_triplets`], but verifies
    /// `‖A − Aᵀ‖∞ ≤ 1e-10·‖A‖∞` and flags the result as symmetric.
    pub fn from_triplets_symmetric(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, SolveError> {
        Self::from_triplets(n, n, triplets)?.into_symmetric()
    }

    /// Checks symmetry and flags the matrix as symmetric.
    pub fn into_symmetric(mut self) -> Result<Self, SolveError> {
        if self.nrows != self.ncols {
            return Err(SolveError::InvalidMatrix(format!(
                "{}x{} matrix cannot be symmetric",
                self.nrows, self.ncols
            )));
        }
        let asym = self.asymmetry_norm();
        let scale = self.inf_norm();
        if asym > 1e-10 * scale {
            return Err(SolveError::InvalidMatrix(format!(
                "matrix declared symmetric but ‖A−Aᵀ‖∞ = {asym:.3e} (‖A‖∞ = {scale:.3e})"
            )));
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: values.to_vec(),
            symmetric: true,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn asymmetry_norm(&self) -> f64 {
        let t = self.transpose();
        (0..self.nrows)
            .map(|r| {
                let (ca, va) = self.row(r);
                let (cb, vb) = t.row(r);
                let (mut i, mut j, mut s) = (0, 0, 0.0);
                while i < ca.len() || j < cb.len() {
                    if j >= cb.len() || (i < ca.len() && ca[i] < cb[j]) {
                        s += va[i].abs();
                        i += 1;
                    } else if i >= ca.len() || cb[j] < ca[i] {
                        s += vb[j].abs();
                        j += 1;
                    } else {
                        s += (va[i] - vb[j]).abs();
                        i += 1;
                        j += 1;
                    }
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                indices[next[c]] = r;
                values[next[c]] = v;
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
            symmetric: self.symmetric,
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "mul_vec: x has wrong length");
        assert_eq!(y.len(), self.nrows, "mul_vec: y has wrong length");
        let row_dot = |r: usize| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum::<f64>()
        };
        if self.nrows >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(r, out)| *out = row_dot(r));
        } else {
            for (r, out) in y.iter_mut().enumerate() {
                *out = row_dot(r);
            }
        }
    }

    /// `y = Aᵀ x` without forming the transpose.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "transpose_mul_vec: x has wrong length");
        let mut y = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * x[r];
            }
        }
        y
    }

    /// Gram matrix `AᵀA`, flagged symmetric.
    pub fn gram(&self) -> Self {
        let mut trip = Vec::new();
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&ci, &vi) in cols.iter().zip(vals) {
                for (&cj, &vj) in cols.iter().zip(vals) {
                    trip.push((ci, cj, vi * vj));
                }
            }
        }
        let mut m = Self::from_triplets(self.ncols, self.ncols, &trip).expect("gram of a valid matrix is valid");
        m.symmetric = true;
        m
    }

    /// `A + s·I` for a square matrix.
    pub fn add_diagonal(&self, s: f64) -> Self {
        assert_eq!(self.nrows, self.ncols);
        let mut trip: Vec<_> = self.triplets().collect();
        trip.extend((0..self.nrows).map(|i| (i, i, s)));
        let mut m = Self::from_triplets(self.nrows, self.ncols, &trip).expect("shifted matrix stays valid");
        m.symmetric = self.symmetric;
        m
    }

    /// `self + s·other` for matrices of equal shape.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Result<Self, SolveError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(SolveError::DimensionMismatch {
                expected: self.nrows * self.ncols,
                found: other.nrows * other.ncols,
            });
        }
        let mut trip: Vec<_> = self.triplets().collect();
        trip.extend(other.triplets().map(|(r, c, v)| (r, c, s * v)));
        let mut m = Self::from_triplets(self.nrows, self.ncols, &trip)?;
        m.symmetric = self.symmetric && other.symmetric;
        Ok(m)
    }

    /// Principal submatrix on the index list `keep` (rows and columns in the
    /// given order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut trip = Vec::new();
        for (new_r, &old_r) in keep.iter().enumerate() {
            let (cols, vals) = self.row(old_r);
            for (&c, &v) in cols.iter().zip(vals) {
                if map[c] != usize::MAX {
                    trip.push((new_r, map[c], v));
                }
            }
        }
        let mut m = Self::from_triplets(keep.len(), keep.len(), &trip).expect("submatrix of a valid matrix is valid");
        m.symmetric = self.symmetric;
        m
    }

    /// Sum of each row.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).1.iter().sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]).unwrap();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn out_of_range_and_nan_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, &[(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn symmetry_is_verified() {
        let ok = SparseMatrix::from_triplets_symmetric(2, &[(0, 1, 1.0), (1, 0, 1.0)]);
        assert!(ok.unwrap().is_symmetric());
        let bad = SparseMatrix::from_triplets_symmetric(2, &[(0, 1, 1.0), (1, 0, 1.1)]);
        assert!(bad.is_err());
    }

    #[test]
    fn transpose_and_gram() {
        let g = SparseMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 2.0), (2, 0, 3.0), (2, 1, 1.0)]).unwrap();
        let t = g.transpose();
        assert_eq!(t.get(0, 2), 3.0);
        assert_eq!(t.get(1, 1), 2.0);
        let x = [1.0, -1.0, 0.5];
        assert_eq!(g.transpose_mul_vec(&x), t.mul_vec(&x));
        let gg = g.gram();
        // columns: c0 = (1,0,3), c1 = (0,2,1)
        assert_eq!(gg.get(0, 0), 10.0);
        assert_eq!(gg.get(0, 1), 3.0);
        assert_eq!(gg.get(1, 1), 5.0);
        assert!(gg.is_symmetric());
    }

    #[test]
    fn principal_submatrix_picks_entries() {
        let m = SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (0, 2, 5.0), (2, 0, 5.0), (2, 2, 9.0), (1, 1, 4.0)])
            .unwrap();
        let s = m.principal_submatrix(&[2, 0]);
        assert_eq!(s.get(0, 0), 9.0);
        assert_eq!(s.get(0, 1), 5.0);
        assert_eq!(s.get(1, 1), 1.0);
    }
}
