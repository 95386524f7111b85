//! Dense and tridiagonal linear-algebra kernels.
//!
//! Everything here is written against plain `Vec<f64>` / slices. The sizes
//! involved are either "projected" (a few hundred at most) or operator-sized
//! vectors that are only ever touched through dot products and axpys, so a
//! full BLAS stack would buy nothing.

mod dense;
mod jacobi;
mod operator;
mod power;
mod tridiagonal;

pub use dense::{DenseMatrix, DenseSymmetric, HouseholderReflector, LuFactor};
pub use jacobi::{symmetric_eig_dense, SymmetricEigen, JACOBI_SWEEP_BUDGET};
pub use operator::{
    DenseOperator, DiagonalOperator, FnOperator, HouseholderSimilarity, LinearOperator,
    SparseSymmetric, Storage, SymmetricAsGeneral, SymmetricLinearOperator,
};
pub use power::{
    operator_norm2, orthonormal_complement, solve_shifted_cg, CgOutcome, NormEstimate,
};
pub use tridiagonal::{
    extremal_eig_tridiagonal, ldl_shifted, solve_shifted, LdlFactor, SymmetricTridiagonal,
};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Errors raised by the linear-algebra kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    /// `T + shift·I` is not positive definite: pivot `index` was `pivot <= 0`.
    #[error("shifted matrix is not positive definite: pivot {index} = {pivot:e}")]
    IndefiniteShift { index: usize, pivot: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is singular to working precision (pivot {index})")]
    Singular { index: usize },
    #[error("non-finite entry in input")]
    NonFinite,
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
}

/// The crate-wide random source. Every random draw in the library goes
/// through an explicitly seeded generator of this type.
pub type Rng64 = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> Rng64 {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Vector of i.i.d. standard normal entries.
pub fn gaussian_vector(rng: &mut Rng64, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Gaussian vector scaled to unit 2-norm.
pub fn random_unit_vector(rng: &mut Rng64, n: usize) -> Vec<f64> {
    let mut v = gaussian_vector(rng, n);
    let nrm = norm2(&v);
    scale(&mut v, 1.0 / nrm);
    v
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(x: &mut [f64], alpha: f64) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// `‖a - b‖₂`
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
