//! The augmented matrix `M = [[−A, ggᵀ/Δ²], [I, −A]]`, whose rightmost
//! eigenvalue is the optimal multiplier, and its Krylov projection.
//!
//! The rightmost eigenpair of the projected matrix is never computed by a
//! nonsymmetric eigensolver. It is built from the tridiagonal subproblem
//! solution (`z₁ ∝ h`, `z₂ = (T+λI)⁻¹z₁`) and then checked as a residual.

use thiserror::Error;

use crate::lanczos::LanczosFactorization;
use crate::linalg::{
    axpy, dot, norm2, operator_norm2, solve_shifted, DenseMatrix, HouseholderReflector,
    LinalgError, LinearOperator, SymmetricLinearOperator, SymmetricTridiagonal,
};

/// Relative eigen-residual accepted by [`eigpair_from_trs`].
pub const EIGPAIR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigEquivError {
    #[error("constructed eigenpair fails verification: residual {residual:e} > {bound:e}")]
    VerificationFailed { residual: f64, bound: f64 },
    #[error("hard case: |g^T y2| = {gty2:e} is negligible relative to {scale:e}")]
    HardCaseSignal { gty2: f64, scale: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Matrix-free `M` over a symmetric operator.
pub struct AugmentedOperator<'a> {
    a: &'a dyn SymmetricLinearOperator,
    g: &'a [f64],
    delta: f64,
}

impl<'a> AugmentedOperator<'a> {
    pub fn new(a: &'a dyn SymmetricLinearOperator, g: &'a [f64], delta: f64) -> Self {
        assert_eq!(a.dim(), g.len());
        AugmentedOperator { a, g, delta }
    }

    pub fn half_dim(&self) -> usize {
        self.a.dim()
    }

    /// Explicit `2n × 2n` matrix (small `n` only).
    pub fn assemble(&self) -> DenseMatrix {
        let n = self.half_dim();
        let mut m = DenseMatrix::zeros(2 * n, 2 * n);
        let mut e = vec![0.0; n];
        let d2 = self.delta * self.delta;
        for j in 0..n {
            e[j] = 1.0;
            let col = self.a.apply_vec(&e);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = -col[i];
                m[(n + i, n + j)] = -col[i];
                m[(i, n + j)] = self.g[i] * self.g[j] / d2;
            }
            m[(n + j, j)] = 1.0;
        }
        m
    }
}

impl LinearOperator for AugmentedOperator<'_> {
    fn nrows(&self) -> usize {
        2 * self.half_dim()
    }

    fn ncols(&self) -> usize {
        2 * self.half_dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.half_dim();
        let (u, v) = x.split_at(n);
        let (top, bottom) = y.split_at_mut(n);
        self.a.apply(u, top);
        self.a.apply(v, bottom);
        let c = dot(self.g, v) / (self.delta * self.delta);
        for i in 0..n {
            top[i] = -top[i] + c * self.g[i];
            bottom[i] = u[i] - bottom[i];
        }
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let n = self.half_dim();
        let (u, v) = x.split_at(n);
        let (top, bottom) = y.split_at_mut(n);
        self.a.apply(u, top);
        self.a.apply(v, bottom);
        let c = dot(self.g, u) / (self.delta * self.delta);
        for i in 0..n {
            top[i] = -top[i] + v[i];
            bottom[i] = c * self.g[i] - bottom[i];
        }
    }
}

/// `M_k = [[−T, β₀²e₁e₁ᵀ/Δ²], [I, −T]]` assembled densely.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedAugmented {
    pub matrix: DenseMatrix,
}

impl ProjectedAugmented {
    pub fn order(&self) -> usize {
        self.matrix.rows() / 2
    }
}

pub fn assemble_projected_m(
    t: &SymmetricTridiagonal,
    beta0: f64,
    delta: f64,
) -> ProjectedAugmented {
    assert!(delta > 0.0, "delta must be positive");
    let m = t.order();
    let mut a = DenseMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        a[(i, i)] = -t.diag()[i];
        a[(m + i, m + i)] = -t.diag()[i];
        a[(m + i, i)] = 1.0;
        if i > 0 {
            let b = t.offdiag()[i - 1];
            for off in [0, m] {
                a[(off + i, off + i - 1)] = -b;
                a[(off + i - 1, off + i)] = -b;
            }
        }
    }
    a[(0, m)] = beta0 * beta0 / (delta * delta);
    ProjectedAugmented { matrix: a }
}

/// Unit-length right eigenvector `(z₁; z₂)` with eigenvalue `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedEigenpair {
    pub mu: f64,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    /// `‖M z − μ z‖ / ‖M‖` as verified (projected pairs only).
    pub relative_residual: f64,
}

impl AugmentedEigenpair {
    pub fn stacked(&self) -> Vec<f64> {
        let mut z = self.z1.clone();
        z.extend_from_slice(&self.z2);
        z
    }
}

/// `(y₁; y₂)/‖(y₁; y₂)‖` with `y₂ = solve(y₁)`.
fn normalized_pair(y1: &[f64], y2: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let nrm = (dot(y1, y1) + dot(&y2, &y2)).sqrt();
    (
        y1.iter().map(|x| x / nrm).collect(),
        y2.into_iter().map(|x| x / nrm).collect(),
    )
}

/// Rightmost eigenpair of `M_k` from a boundary solution `(λ, h)` of the
/// tridiagonal subproblem, verified against the assembled `M_k`.
pub fn eigpair_from_trs(
    t: &SymmetricTridiagonal,
    lambda: f64,
    h: &[f64],
    beta0: f64,
    delta: f64,
) -> Result<AugmentedEigenpair, EigEquivError> {
    let mk = assemble_projected_m(t, beta0, delta);
    eigpair_from_trs_with(&mk, t, lambda, h)
}

/// As [`eigpair_from_trs`], against an already assembled `M_k`.
pub fn eigpair_from_trs_with(
    mk: &ProjectedAugmented,
    t: &SymmetricTridiagonal,
    lambda: f64,
    h: &[f64],
) -> Result<AugmentedEigenpair, EigEquivError> {
    let y2 = solve_shifted(t, lambda, h)?;
    let (z1, z2) = normalized_pair(h, y2);
    let mut z = z1.clone();
    z.extend_from_slice(&z2);
    let mut r = mk.matrix.matvec(&z);
    axpy(-lambda, &z, &mut r);
    let residual = norm2(&r);
    // Largest column norm never exceeds ‖M_k‖₂, so this bound is the
    // stricter of the two.
    let scale = mk.matrix.max_column_norm();
    let bound = EIGPAIR_TOL * scale;
    if !(residual <= bound) {
        return Err(EigEquivError::VerificationFailed { residual, bound });
    }
    Ok(AugmentedEigenpair {
        mu: lambda,
        z1,
        z2,
        relative_residual: residual / scale,
    })
}

/// Full-space eigenvector of `M` for `λ_opt` in the easy case:
/// `y₁ ∝ s_opt`, `y₂ = (A+λI)⁻¹y₁` supplied by the caller, jointly normalized.
pub fn full_space_eigenpair(
    lambda: f64,
    s_opt: &[f64],
    y2_unscaled: Vec<f64>,
) -> AugmentedEigenpair {
    let (z1, z2) = normalized_pair(s_opt, y2_unscaled);
    AugmentedEigenpair {
        mu: lambda,
        z1,
        z2,
        relative_residual: f64::NAN,
    }
}

/// `s = −Δ²/(gᵀy₂)·y₁`
pub fn recover_solution(
    y1: &[f64],
    y2: &[f64],
    g: &[f64],
    delta: f64,
) -> Result<Vec<f64>, EigEquivError> {
    let gty2 = dot(g, y2);
    let scale = norm2(g) * norm2(y2);
    if gty2.abs() <= 1e-13 * scale || scale == 0.0 {
        return Err(EigEquivError::HardCaseSignal {
            gty2: gty2.abs(),
            scale,
        });
    }
    let c = -delta * delta / gty2;
    Ok(y1.iter().map(|x| c * x).collect())
}

/// `s(λ) = 1/(2 z₁ᵀ(T+λI)⁻¹z₁)` for a unit-length pair.
pub fn spectral_condition(
    t: &SymmetricTridiagonal,
    lambda: f64,
    z1: &[f64],
) -> Result<f64, LinalgError> {
    let w = solve_shifted(t, lambda, z1)?;
    Ok(1.0 / (2.0 * dot(z1, &w)))
}

/// `σ_min(C − μI)` with `C = Z⊥ᵀ M Z⊥`, `Z⊥` an orthonormal basis of `z⊥`.
///
/// `Z⊥` is the trailing columns of the Householder reflector `H` taking `z`
/// to `±e₁`, so `C` is the trailing block of `HMH`.
pub fn separation(m: &DenseMatrix, z: &[f64], mu: f64) -> Result<f64, LinalgError> {
    let dim = m.rows();
    if z.len() != dim {
        return Err(LinalgError::DimensionMismatch {
            expected: dim,
            got: z.len(),
        });
    }
    if dim < 2 {
        return Ok(f64::INFINITY);
    }
    let nz = norm2(z);
    if nz == 0.0 {
        return Err(LinalgError::ZeroVector);
    }
    let unit: Vec<f64> = z.iter().map(|x| x / nz).collect();
    let hmh = match HouseholderReflector::annihilating(&unit) {
        Some(h) => h.similarity(m),
        None => m.clone(),
    };
    let c = dim - 1;
    let mut b = DenseMatrix::zeros(c, c);
    for i in 0..c {
        for j in 0..c {
            b[(i, j)] = hmh[(i + 1, j + 1)];
        }
        b[(i, i)] -= mu;
    }
    let gram = b.gram().tridiagonalize();
    let smallest = gram.smallest_eigenvalue();
    Ok(smallest.max(0.0).sqrt())
}

/// `sin∠(y, S̃_k)` for unit `(y₁; y₂)` against `blockdiag(Q, Q)` over the
/// leading `cols` Lanczos vectors.
pub fn subspace_sine(y1: &[f64], y2: &[f64], f: &LanczosFactorization, cols: usize) -> f64 {
    let d1 = f.distance_to_span(y1, cols);
    let d2 = f.distance_to_span(y2, cols);
    (d1 * d1 + d2 * d2).sqrt().min(1.0)
}

/// `π̃ M (I − π̃)` with `π̃ = blockdiag(QQᵀ, QQᵀ)`.
struct CoupledProjection<'a> {
    m: &'a AugmentedOperator<'a>,
    f: &'a LanczosFactorization,
    cols: usize,
}

impl CoupledProjection<'_> {
    fn project_halves(&self, x: &mut [f64], complement: bool) {
        let n = self.m.half_dim();
        for half in x.chunks_mut(n) {
            let c = self.f.project(half, self.cols);
            let mut p = vec![0.0; n];
            for (col, ci) in self.f.columns().take(self.cols).zip(&c) {
                axpy(*ci, col, &mut p);
            }
            if complement {
                for (hi, pi) in half.iter_mut().zip(&p) {
                    *hi -= pi;
                }
            } else {
                half.copy_from_slice(&p);
            }
        }
    }
}

impl LinearOperator for CoupledProjection<'_> {
    fn nrows(&self) -> usize {
        self.m.nrows()
    }

    fn ncols(&self) -> usize {
        self.m.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut w = x.to_vec();
        self.project_halves(&mut w, true);
        self.m.apply(&w, y);
        self.project_halves(y, false);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let mut w = x.to_vec();
        self.project_halves(&mut w, false);
        self.m.apply_transpose(&w, y);
        self.project_halves(y, true);
    }
}

/// `γ̃_k = ‖π̃_k M (I − π̃_k)‖` by power iteration (diagnostic).
pub fn gamma_tilde(
    m: &AugmentedOperator<'_>,
    f: &LanczosFactorization,
    cols: usize,
    tol: f64,
    seed: u64,
) -> f64 {
    let op = CoupledProjection { m, f, cols };
    operator_norm2(&op, tol, 500, seed).value
}

/// `sin∠(s_k, s_opt)` and `‖s_k − s_opt‖/‖s_opt‖`.
pub fn solution_sine(sk: &[f64], sopt: &[f64]) -> (f64, f64) {
    let nk = norm2(sk);
    let no = norm2(sopt);
    assert!(nk > 0.0 && no > 0.0, "vectors must be nonzero");
    let u: Vec<f64> = sk.iter().map(|x| x / nk).collect();
    let v: Vec<f64> = sopt.iter().map(|x| x / no).collect();
    let c = dot(&u, &v);
    let mut r = u;
    axpy(-c, &v, &mut r);
    let sine = norm2(&r).min(1.0);
    let rel: f64 = sk
        .iter()
        .zip(sopt)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        / no;
    (sine, rel)
}
