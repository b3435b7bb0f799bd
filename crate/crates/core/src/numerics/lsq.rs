use super::{solve_spd, SolveError, SolveOptions, SparseMatrix};

/// Default ridge weight: `1e-8` times the largest diagonal entry of `GᵀG`.
pub fn default_epsilon(g: &SparseMatrix) -> f64 {
    let mut col_sq = vec![0.0; g.ncols()];
    for (_, c, v) in g.triplets() {
        col_sq[c] += v * v;
    }
    1e-8 * col_sq.into_iter().fold(0.0, f64::max)
}

/// Returns `argmin ‖Gφ − target‖² + eps‖φ‖²` by solving the normal
/// equations `(GᵀG + eps·I) φ = Gᵀ target`.
pub fn solve_regularized_ls(
    g: &SparseMatrix,
    target: &[f64],
    eps: f64,
    opts: &SolveOptions,
) -> Result<Vec<f64>, SolveError> {
    if target.len() != g.nrows() {
        return Err(SolveError::DimensionMismatch {
            expected: g.nrows(),
            found: target.len(),
        });
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(SolveError::InvalidArgument(format!(
            "regularizer must be finite and non-negative, got {eps}"
        )));
    }
    let normal = if eps > 0.0 {
        g.gram().add_diagonal(eps)
    } else {
        g.gram()
    };
    let rhs = g.transpose_mul_vec(target);
    solve_spd(&normal, &rhs, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_shrinks() {
        let g = SparseMatrix::identity(3);
        let t = [1.0, -2.0, 4.0];
        let eps = 0.25;
        let phi = solve_regularized_ls(&g, &t, eps, &SolveOptions::default()).unwrap();
        for (p, ti) in phi.iter().zip(&t) {
            assert!((p - ti / (1.0 + eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_target_gives_zero() {
        let g = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let phi = solve_regularized_ls(&g, &[0.0, 0.0], 1e-3, &SolveOptions::default()).unwrap();
        assert_eq!(phi, vec![0.0, 0.0]);
    }

    #[test]
    fn negative_eps_rejected() {
        let g = SparseMatrix::identity(2);
        assert!(matches!(
            solve_regularized_ls(&g, &[1.0, 0.0], -1.0, &SolveOptions::default()),
            Err(SolveError::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_eps_rank_deficient_returns_a_minimizer() {
        // rank one: any φ with φ0 + φ1 = 0.5 minimizes the residual
        let g = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let phi = solve_regularized_ls(&g, &[1.0, 0.0], 0.0, &SolveOptions::default()).unwrap();
        assert!((phi[0] + phi[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn default_epsilon_scales_with_g() {
        let g = SparseMatrix::from_triplets(2, 2, &[(0, 0, 3.0), (1, 0, 4.0), (1, 1, 1.0)]).unwrap();
        assert!((default_epsilon(&g) - 25e-8).abs() < 1e-20);
    }
}
