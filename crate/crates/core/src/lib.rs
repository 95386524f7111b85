//! Trust-region subproblem solver built on the Lanczos process, with the
//! augmented-matrix eigenvalue view of the problem and a-priori convergence
//! bounds for the Krylov iterates.

// NaN must fail these comparisons, and the dense kernels read best indexed.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod eig_equiv;
pub mod experiments;
pub mod gltr;
pub mod lanczos;
pub mod linalg;
pub mod mmio;
pub mod trs;
