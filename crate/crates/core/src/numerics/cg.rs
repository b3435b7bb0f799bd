use serde::{Deserialize, Serialize};

use super::{dot, norm, SolveError, SparseMatrix};

/// Stopping rule for [`solve_spd`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Target relative residual `‖Ax − b‖ / ‖b‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `max(1000, 10·n)`.
    pub max_iter: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Solves `A x = b` for symmetric positive (semi-)definite `A` with
/// Jacobi-preconditioned conjugate gradients, starting from zero.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], opts: &SolveOptions) -> Result<Vec<f64>, SolveError> {
    solve_spd_with_guess(a, b, None, opts)
}

/// Same as [`solve_spd`] with an optional initial guess.
pub fn solve_spd_with_guess(
    a: &SparseMatrix,
    b: &[f64],
    guess: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<Vec<f64>, SolveError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if let Some(g) = guess {
        if g.len() != n {
            return Err(SolveError::DimensionMismatch {
                expected: n,
                found: g.len(),
            });
        }
    }
    if !(opts.tol > 0.0) {
        return Err(SolveError::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::InvalidArgument("right-hand side is not finite".into()));
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }

    let diag = a.diag();
    let mut inv_diag = Vec::with_capacity(n);
    for (i, &d) in diag.iter().enumerate() {
        if d < 0.0 {
            return Err(SolveError::InvalidMatrix(format!(
                "negative diagonal entry {d:.3e} at row {i}; matrix is not positive semi-definite"
            )));
        }
        if d == 0.0 {
            // A zero diagonal in a PSD matrix means a zero row.
            if b[i] != 0.0 {
                return Err(SolveError::NotConverged {
                    iterations: 0,
                    residual: b[i].abs() / bnorm,
                });
            }
            inv_diag.push(0.0);
        } else {
            inv_diag.push(1.0 / d);
        }
    }

    let max_iter = opts.max_iter.unwrap_or_else(|| (10 * n).max(1000));
    let mut x = guess.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let mut total_iter = 0usize;

    // A few restarts guard against drift between the recurrence and the
    // true residual.
    for _restart in 0..4 {
        let mut r = a.mul_vec(&x);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let mut rnorm = norm(&r);
        if rnorm <= opts.tol * bnorm {
            return Ok(x);
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        while total_iter < max_iter {
            total_iter += 1;
            a.mul_vec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                // direction of zero curvature: the system is singular along p
                return Err(SolveError::NotConverged {
                    iterations: total_iter,
                    residual: rnorm / bnorm,
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            rnorm = norm(&r);
            if rnorm <= opts.tol * bnorm {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let mut true_r = a.mul_vec(&x);
        for i in 0..n {
            true_r[i] = b[i] - true_r[i];
        }
        let true_rel = norm(&true_r) / bnorm;
        if true_rel <= opts.tol {
            return Ok(x);
        }
        if total_iter >= max_iter {
            return Err(SolveError::NotConverged {
                iterations: total_iter,
                residual: true_rel,
            });
        }
    }
    let mut r = a.mul_vec(&x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    Err(SolveError::NotConverged {
        iterations: total_iter,
        residual: norm(&r) / bnorm,
    })
}
