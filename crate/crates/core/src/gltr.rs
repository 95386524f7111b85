//! Generalized Lanczos trust-region driver: grow the Krylov basis, solve the
//! tridiagonal subproblem at every step, stop on the residual identity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lanczos::{lanczos_run, LanczosError, LanczosFactorization, DEFAULT_BREAKDOWN_TOL};
use crate::linalg::{
    axpy, dot, norm2, solve_shifted, LinalgError, SymmetricLinearOperator, SymmetricTridiagonal,
};
use crate::trs::{solve_trs_tridiagonal_with, CaseTag, TrsError, TrsOptions, DEFAULT_TRS_TOL};

pub const DEFAULT_RESID_TOL: f64 = 1e-13;
pub const DEFAULT_K_MAX: usize = 300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GltrError {
    #[error("gradient is zero; s = 0 is optimal and there is no Krylov subspace to build")]
    ZeroGradient,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("at iteration {k}: {source}")]
    Trs {
        k: usize,
        #[source]
        source: TrsError,
    },
    #[error(transparent)]
    Lanczos(#[from] LanczosError),
}

#[derive(Debug, Clone, Copy)]
pub struct GltrOptions {
    pub resid_tol: f64,
    pub k_max: usize,
    pub trs_tol: f64,
    pub breakdown_tol: f64,
    /// Form `s_k` every step and record the explicit residual and directly
    /// evaluated objective.
    pub verify_residuals: bool,
    /// Keep every reduced solution `h_k`.
    pub keep_iterates: bool,
    /// Start each secular solve from the previous multiplier.
    pub warm_start: bool,
}

impl Default for GltrOptions {
    fn default() -> Self {
        GltrOptions {
            resid_tol: DEFAULT_RESID_TOL,
            k_max: DEFAULT_K_MAX,
            trs_tol: DEFAULT_TRS_TOL,
            breakdown_tol: DEFAULT_BREAKDOWN_TOL,
            verify_residuals: false,
            keep_iterates: false,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    ResidualTol,
    Breakdown,
    KMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub k: usize,
    pub lambda: f64,
    /// `q(s_k)` from the tridiagonal closed form.
    pub q: f64,
    /// `β_{k+1}·|e_{k+1}ᵀh_k|`
    pub resid_formula: f64,
    pub resid_explicit: Option<f64>,
    /// `gᵀs_k + ½s_kᵀAs_k`, evaluated in the full space.
    pub q_direct: Option<f64>,
    /// Last entry of `h_k`.
    pub last_entry: f64,
    pub beta_next: f64,
    pub case: CaseTag,
    pub secular_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct GltrResult {
    pub history: Vec<ConvergenceRecord>,
    pub lambda: f64,
    pub s: Vec<f64>,
    pub q: f64,
    pub h: Vec<f64>,
    pub case: CaseTag,
    pub termination: TerminationReason,
    pub factorization: LanczosFactorization,
    /// `h_k` for every recorded `k` when `keep_iterates` was set.
    pub iterates: Option<Vec<Vec<f64>>>,
}

impl GltrResult {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    /// `s_k = Q_k h_k` for a kept iterate.
    pub fn iterate(&self, k: usize) -> Option<Vec<f64>> {
        self.iterates
            .as_ref()
            .and_then(|it| it.get(k))
            .map(|h| self.factorization.combine(h))
    }
}

/// `q(s_k) = −½β₀²e₁ᵀ(T+λI)⁻¹e₁ − ½λΔ²`.
///
/// Valid whenever `‖h‖ = Δ` or `λ = 0`, i.e. for boundary and interior
/// solutions alike.
pub fn objective_via_tridiagonal(
    t: &SymmetricTridiagonal,
    lambda: f64,
    beta0: f64,
    delta: f64,
) -> Result<f64, LinalgError> {
    let mut e1 = vec![0.0; t.order()];
    e1[0] = 1.0;
    let x = solve_shifted(t, lambda, &e1)?;
    Ok(-0.5 * beta0 * beta0 * x[0] - 0.5 * lambda * delta * delta)
}

/// `‖(A+λI)s + g‖` by one operator application.
pub fn explicit_residual(
    a: &dyn SymmetricLinearOperator,
    g: &[f64],
    lambda: f64,
    s: &[f64],
) -> f64 {
    let mut r = a.apply_vec(s);
    axpy(lambda, s, &mut r);
    axpy(1.0, g, &mut r);
    norm2(&r)
}

/// `gᵀs + ½sᵀAs`
pub fn objective(a: &dyn SymmetricLinearOperator, g: &[f64], s: &[f64]) -> f64 {
    let as_ = a.apply_vec(s);
    dot(g, s) + 0.5 * dot(s, &as_)
}

pub fn gltr_solve(
    a: &dyn SymmetricLinearOperator,
    g: &[f64],
    delta: f64,
    opts: &GltrOptions,
) -> Result<GltrResult, GltrError> {
    if g.len() != a.dim() {
        return Err(GltrError::InvalidInput(format!(
            "gradient has length {}, operator has dimension {}",
            g.len(),
            a.dim()
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(GltrError::InvalidInput(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if norm2(g) == 0.0 {
        return Err(GltrError::ZeroGradient);
    }

    let mut f = lanczos_run(a, g, 0, opts.breakdown_tol)?;
    let beta0 = f.beta0();
    let mut history = Vec::new();
    let mut iterates = opts.keep_iterates.then(Vec::new);
    let mut prev_lambda: Option<f64> = None;
    loop {
        let k = f.k();
        let trs_opts = TrsOptions {
            tol: opts.trs_tol,
            lambda_hint: if opts.warm_start {
                prev_lambda.filter(|l| *l > 0.0)
            } else {
                None
            },
            ..TrsOptions::default()
        };
        let sol = solve_trs_tridiagonal_with(f.t(), beta0, delta, &trs_opts)
            .map_err(|source| GltrError::Trs { k, source })?;
        let last_entry = sol.h[k];
        let resid_formula = f.beta_next() * last_entry.abs();
        let q = objective_via_tridiagonal(f.t(), sol.lambda, beta0, delta).map_err(|e| {
            GltrError::Trs {
                k,
                source: e.into(),
            }
        })?;

        let (resid_explicit, q_direct) = if opts.verify_residuals {
            let s = f.combine(&sol.h);
            let mut as_ = a.apply_vec(&s);
            let qd = dot(g, &s) + 0.5 * dot(&s, &as_);
            axpy(sol.lambda, &s, &mut as_);
            axpy(1.0, g, &mut as_);
            (Some(norm2(&as_)), Some(qd))
        } else {
            (None, None)
        };

        history.push(ConvergenceRecord {
            k,
            lambda: sol.lambda,
            q,
            resid_formula,
            resid_explicit,
            q_direct,
            last_entry,
            beta_next: f.beta_next(),
            case: sol.case,
            secular_iterations: sol.secular_iterations,
        });
        if let Some(it) = iterates.as_mut() {
            it.push(sol.h.clone());
        }
        prev_lambda = Some(sol.lambda);

        let termination = if f.broken_down() {
            Some(TerminationReason::Breakdown)
        } else if resid_formula <= opts.resid_tol {
            Some(TerminationReason::ResidualTol)
        } else if k >= opts.k_max {
            Some(TerminationReason::KMax)
        } else {
            None
        };
        if let Some(termination) = termination {
            let s = f.combine(&sol.h);
            return Ok(GltrResult {
                history,
                lambda: sol.lambda,
                s,
                q,
                h: sol.h,
                case: sol.case,
                termination,
                factorization: f,
                iterates,
            });
        }
        f.advance(a)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseSymmetric, DiagonalOperator};
    use crate::trs::solve_trs_dense;

    #[test]
    fn identity_breaks_down_at_once() {
        let a = DiagonalOperator::new(vec![1.0; 3]);
        let g = [2.0, 0.0, 0.0];
        let r = gltr_solve(&a, &g, 1.0, &GltrOptions::default()).unwrap();
        assert_eq!(r.termination, TerminationReason::Breakdown);
        assert_eq!(r.iterations(), 1);
        assert!((r.lambda - 1.0).abs() < 1e-13);
        assert!((r.s[0] + 1.0).abs() < 1e-13);
    }

    #[test]
    fn three_distinct_eigenvalues_match_oracle() {
        let d = vec![1.0, 2.0, 3.0];
        let a = DiagonalOperator::new(d.clone());
        let r3 = 1.0 / 3f64.sqrt();
        let g = [r3, r3, r3];
        let r = gltr_solve(&a, &g, 1.0, &GltrOptions::default()).unwrap();
        assert_eq!(r.termination, TerminationReason::Breakdown);
        assert_eq!(r.factorization.k(), 2);
        let o = solve_trs_dense(&DenseSymmetric::from_diagonal(&d), &g, 1.0, 1e-13).unwrap();
        assert!((r.lambda - o.lambda).abs() < 1e-10);
        for (x, y) in r.s.iter().zip(&o.h) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn scalar_objective_by_hand() {
        let t = SymmetricTridiagonal::new(vec![2.0], vec![]).unwrap();
        let q = objective_via_tridiagonal(&t, 2.0, 4.0, 1.0).unwrap();
        assert!((q + 3.0).abs() < 1e-15);
        let a = DiagonalOperator::new(vec![2.0]);
        assert!((objective(&a, &[4.0], &[-1.0]) + 3.0).abs() < 1e-15);
    }

    #[test]
    fn explicit_residual_of_zero_step() {
        let a = DiagonalOperator::new(vec![1.0, 2.0]);
        assert_eq!(explicit_residual(&a, &[1.0, 0.0], 0.0, &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn zero_gradient_is_an_error() {
        let a = DiagonalOperator::new(vec![1.0, 2.0]);
        assert!(matches!(
            gltr_solve(&a, &[0.0, 0.0], 1.0, &GltrOptions::default()),
            Err(GltrError::ZeroGradient)
        ));
    }
}
