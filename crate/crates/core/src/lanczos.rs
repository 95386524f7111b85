//! Symmetric Lanczos with complete two-pass reorthogonalization.

use thiserror::Error;

use crate::linalg::{
    axpy, dot, norm2, random_unit_vector, seeded_rng, SymmetricLinearOperator, SymmetricTridiagonal,
};

pub const DEFAULT_BREAKDOWN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LanczosError {
    #[error("starting vector is zero")]
    ZeroStartVector,
    #[error("factorization has already broken down; the Krylov subspace is invariant")]
    AlreadyBrokenDown,
    #[error("dimension mismatch: operator has dimension {expected}, vector has length {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// `A Q = Q T + β_next q_next e_lastᵀ` with `Q` holding `q₀ = g/β₀, …, q_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LanczosFactorization {
    n: usize,
    /// Column-major, `n × (k+1)`.
    q: Vec<f64>,
    t: SymmetricTridiagonal,
    beta0: f64,
    beta_next: f64,
    q_next: Vec<f64>,
    broken_down: bool,
    breakdown_tol: f64,
    norm_estimate: f64,
}

impl LanczosFactorization {
    /// Start from `g` and run the first step (T of order 1).
    fn start(
        a: &dyn SymmetricLinearOperator,
        g: &[f64],
        breakdown_tol: f64,
    ) -> Result<Self, LanczosError> {
        let n = a.dim();
        if g.len() != n {
            return Err(LanczosError::DimensionMismatch {
                expected: n,
                got: g.len(),
            });
        }
        let beta0 = norm2(g);
        if beta0 == 0.0 || !beta0.is_finite() {
            return Err(LanczosError::ZeroStartVector);
        }
        let mut f = LanczosFactorization {
            n,
            q: Vec::with_capacity(n * 16),
            t: SymmetricTridiagonal::empty(),
            beta0,
            beta_next: 0.0,
            q_next: g.iter().map(|x| x / beta0).collect(),
            broken_down: false,
            breakdown_tol,
            norm_estimate: 0.0,
        };
        f.step(a);
        Ok(f)
    }

    /// Append `q_next` as a new column and compute the next δ, β.
    fn step(&mut self, a: &dyn SymmetricLinearOperator) {
        let n = self.n;
        let j = self.t.order();
        let beta_j = self.beta_next;
        let qj = std::mem::take(&mut self.q_next);
        self.q.extend_from_slice(&qj);

        let mut w = vec![0.0; n];
        a.apply(&qj, &mut w);
        let mut delta = dot(&qj, &w);
        axpy(-delta, &qj, &mut w);
        if j > 0 {
            let prev = &self.q[(j - 1) * n..j * n];
            axpy(-beta_j, prev, &mut w);
        }
        // Two passes of classical Gram-Schmidt against every stored column.
        let cols = j + 1;
        let mut c = vec![0.0; cols];
        for _ in 0..2 {
            for (i, ci) in c.iter_mut().enumerate() {
                *ci = dot(&self.q[i * n..(i + 1) * n], &w);
            }
            for (i, ci) in c.iter().enumerate() {
                axpy(-ci, &self.q[i * n..(i + 1) * n], &mut w);
            }
            delta += c[j];
        }
        let beta = norm2(&w);
        self.t.push(beta_j, delta);
        self.norm_estimate = self.norm_estimate.max(delta.abs() + beta_j + beta);
        self.beta_next = beta;
        if beta <= self.breakdown_tol * self.norm_estimate || beta == 0.0 {
            self.broken_down = true;
            self.q_next = vec![0.0; n];
        } else {
            for wi in w.iter_mut() {
                *wi /= beta;
            }
            self.q_next = w;
        }
    }

    /// One more Lanczos step in place.
    pub fn advance(&mut self, a: &dyn SymmetricLinearOperator) -> Result<(), LanczosError> {
        if self.broken_down {
            return Err(LanczosError::AlreadyBrokenDown);
        }
        if a.dim() != self.n {
            return Err(LanczosError::DimensionMismatch {
                expected: self.n,
                got: a.dim(),
            });
        }
        self.step(a);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Index `k` of the last basis vector (T has order `k+1`).
    pub fn k(&self) -> usize {
        self.t.order() - 1
    }

    pub fn t(&self) -> &SymmetricTridiagonal {
        &self.t
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    /// `β_{k+1}`, the coupling to the next (not yet stored) basis vector.
    pub fn beta_next(&self) -> f64 {
        self.beta_next
    }

    /// `q_{k+1}`; zero after breakdown.
    pub fn q_next(&self) -> &[f64] {
        &self.q_next
    }

    pub fn broken_down(&self) -> bool {
        self.broken_down
    }

    /// Running estimate of `‖A‖` from the entries of T.
    pub fn norm_estimate(&self) -> f64 {
        self.norm_estimate
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.q[i * self.n..(i + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.q.chunks_exact(self.n)
    }

    /// `Q h` using the leading `h.len()` columns.
    pub fn combine(&self, h: &[f64]) -> Vec<f64> {
        assert!(h.len() <= self.t.order());
        let mut s = vec![0.0; self.n];
        for (col, &hi) in self.columns().zip(h) {
            axpy(hi, col, &mut s);
        }
        s
    }

    /// `Qᵀ v` over the leading `cols` columns.
    pub fn project(&self, v: &[f64], cols: usize) -> Vec<f64> {
        self.columns().take(cols).map(|c| dot(c, v)).collect()
    }

    /// `‖v − Q Qᵀ v‖` over the leading `cols` columns.
    pub fn distance_to_span(&self, v: &[f64], cols: usize) -> f64 {
        let c = self.project(v, cols);
        let mut r = v.to_vec();
        for (col, ci) in self.columns().take(cols).zip(&c) {
            axpy(-ci, col, &mut r);
        }
        norm2(&r)
    }
}

/// Lanczos factorization of `A` from `g` through step `min(k_max, k_break)`.
pub fn lanczos_run(
    a: &dyn SymmetricLinearOperator,
    g: &[f64],
    k_max: usize,
    breakdown_tol: f64,
) -> Result<LanczosFactorization, LanczosError> {
    let mut f = LanczosFactorization::start(a, g, breakdown_tol)?;
    while f.k() < k_max && !f.broken_down {
        f.step(a);
    }
    Ok(f)
}

/// `f` grown by up to `steps` more iterations (stopping early on breakdown).
pub fn extend_lanczos(
    f: &LanczosFactorization,
    a: &dyn SymmetricLinearOperator,
    steps: usize,
) -> Result<LanczosFactorization, LanczosError> {
    if steps == 0 {
        return Ok(f.clone());
    }
    let mut g = f.clone();
    g.advance(a)?;
    for _ in 1..steps {
        if g.broken_down {
            break;
        }
        g.step(a);
    }
    Ok(g)
}

/// Extremal eigenvalue estimates of an operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalEstimate {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub converged: bool,
}

/// `(λ_min(A), λ_max(A))` from Ritz values of a Lanczos run started at a
/// seeded random vector. Converged once both extremal Ritz values move by at
/// most `tol·‖T‖` over a window of 10 steps, or on breakdown.
pub fn extremal_eigenvalues(
    a: &dyn SymmetricLinearOperator,
    seed: u64,
    tol: f64,
    max_steps: usize,
) -> ExtremalEstimate {
    const WINDOW: usize = 10;
    let mut rng = seeded_rng(seed);
    let start = random_unit_vector(&mut rng, a.dim());
    let mut f = LanczosFactorization::start(a, &start, DEFAULT_BREAKDOWN_TOL)
        .expect("random start vector is nonzero");
    let mut history: Vec<(f64, f64)> = Vec::new();
    loop {
        let t = f.t();
        let eig_tol = t
            .default_eig_tol()
            .min(0.1 * tol * t.norm_inf().max(f64::MIN_POSITIVE));
        let lo = t.eigenvalue_bisect(0, eig_tol);
        let hi = t.eigenvalue_bisect(t.order() - 1, eig_tol);
        history.push((lo, hi));
        let steps = f.k() + 1;
        if f.broken_down() {
            return ExtremalEstimate {
                min: lo,
                max: hi,
                steps,
                converged: true,
            };
        }
        if history.len() > WINDOW {
            let (plo, phi) = history[history.len() - 1 - WINDOW];
            let scale = t.norm_inf();
            if (lo - plo).abs() <= tol * scale && (hi - phi).abs() <= tol * scale {
                return ExtremalEstimate {
                    min: lo,
                    max: hi,
                    steps,
                    converged: true,
                };
            }
        }
        if steps >= max_steps {
            return ExtremalEstimate {
                min: lo,
                max: hi,
                steps,
                converged: false,
            };
        }
        f.step(a);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DiagonalOperator;

    #[test]
    fn identity_breaks_down_immediately() {
        let a = DiagonalOperator::new(vec![1.0; 4]);
        let f = lanczos_run(&a, &[1.0, 2.0, 0.0, -1.0], 10, DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(f.k(), 0);
        assert!((f.t().diag()[0] - 1.0).abs() < 1e-15);
        assert!(f.beta_next() < 1e-15);
        assert!(f.broken_down());
    }

    #[test]
    fn eigenvector_start_breaks_down() {
        let a = DiagonalOperator::new(vec![1.0, 2.0, 3.0]);
        let f = lanczos_run(&a, &[1.0, 0.0, 0.0], 10, DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(f.k(), 0);
        assert!(f.broken_down());
        assert!((f.t().diag()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = DiagonalOperator::new(vec![1.0, 2.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let f = lanczos_run(&a, &[r, r], 10, DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(f.k(), 1);
        assert!(f.broken_down());
        assert!((f.t().diag()[0] - 1.5).abs() < 1e-15);
        assert!((f.t().offdiag()[0] - 0.5).abs() < 1e-15);
        assert!((f.t().diag()[1] - 1.5).abs() < 1e-15);
        assert!(matches!(
            extend_lanczos(&f, &a, 1),
            Err(LanczosError::AlreadyBrokenDown)
        ));
    }

    #[test]
    fn zero_start_is_rejected() {
        let a = DiagonalOperator::new(vec![1.0, 2.0]);
        assert_eq!(
            lanczos_run(&a, &[0.0, 0.0], 3, DEFAULT_BREAKDOWN_TOL).unwrap_err(),
            LanczosError::ZeroStartVector
        );
    }

    #[test]
    fn extension_is_deterministic() {
        let a = DiagonalOperator::new((1..=30).map(|i| (i as f64).sqrt()).collect());
        let g: Vec<f64> = (0..30).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let full = lanczos_run(&a, &g, 5, DEFAULT_BREAKDOWN_TOL).unwrap();
        let short = lanczos_run(&a, &g, 2, DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(extend_lanczos(&short, &a, 0).unwrap(), short);
        assert_eq!(extend_lanczos(&short, &a, 3).unwrap(), full);
    }

    #[test]
    fn extremal_eigenvalues_of_diagonal() {
        let a = DiagonalOperator::new((0..200).map(|i| -1.0 + 2.0 * i as f64 / 199.0).collect());
        let e = extremal_eigenvalues(&a, 3, 1e-12, 400);
        assert!(e.converged);
        assert!((e.min + 1.0).abs() < 1e-10 && (e.max - 1.0).abs() < 1e-10);
    }
}
