//! Sparse linear algebra shared by every stage: compressed sparse row
//! matrices, a Jacobi-preconditioned conjugate gradient solver for
//! symmetric positive (semi-)definite systems, and the ridge-regularized
//! least-squares solve used by the scalar field fit.

mod cg;
mod envelope;
mod lsq;
mod sparse;

pub use cg::{solve_spd, solve_spd_with_guess, SolveOptions};
pub use envelope::EnvelopeCholesky;
pub use lsq::{default_epsilon, solve_regularized_ls};
pub use sparse::SparseMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Fixed chunk size for reductions. Partial sums are always combined in
/// chunk order so results do not depend on the thread count.
const REDUCE_CHUNK: usize = 8192;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    use rayon::prelude::*;
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= REDUCE_CHUNK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let partials: Vec<f64> = a
        .par_chunks(REDUCE_CHUNK)
        .zip(b.par_chunks(REDUCE_CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>())
        .collect();
    partials.iter().sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
