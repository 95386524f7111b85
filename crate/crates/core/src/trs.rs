//! Trust-region subproblems `min gᵀs + ½sᵀAs, ‖s‖ ≤ Δ` for tridiagonal
//! and small dense `A`, plus a KKT verifier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lanczos::extremal_eigenvalues;
use crate::linalg::{
    axpy, dot, ldl_shifted, norm2, symmetric_eig_dense, DenseSymmetric, LinalgError, Storage,
    SymmetricLinearOperator, SymmetricTridiagonal,
};

pub const DEFAULT_TRS_TOL: f64 = 1e-13;
pub const DEFAULT_SECULAR_BUDGET: usize = 100;
/// Boundary residual accepted once λ can no longer move.
const RESOLVED_BOUNDARY_TOL: f64 = 1e-10;
/// Past this boundary residual a stalled λ is reported as near-hard even
/// when ‖h(λ)‖ is that steep.
const UNRESOLVED_BOUNDARY_CAP: f64 = 1e-6;
/// Largest order accepted by [`solve_trs_dense`].
pub const DENSE_ORACLE_CAP: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    Boundary,
    Interior,
    NearHard,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrsError {
    /// The multiplier is pinned at `-θ_min` while `‖h‖` stays below `Δ`.
    #[error("near hard case: lambda = {lambda:e} pinned at -theta_min (bracket gap {gap:e}), |h| = {h_norm:e} < delta")]
    NearHardCase { lambda: f64, h_norm: f64, gap: f64 },
    #[error("secular iteration did not converge after {iterations} iterations (relative boundary residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrsSolution {
    pub lambda: f64,
    /// Minimizer in the coordinates of the problem that was solved.
    pub h: Vec<f64>,
    pub case: CaseTag,
    pub secular_iterations: usize,
    pub kkt: Option<KktReport>,
}

#[derive(Debug, Clone, Copy)]
pub struct TrsOptions {
    /// Relative boundary tolerance `|‖h‖−Δ| ≤ tol·Δ`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Starting multiplier, used only if it lies left of the root.
    pub lambda_hint: Option<f64>,
}

impl Default for TrsOptions {
    fn default() -> Self {
        TrsOptions {
            tol: DEFAULT_TRS_TOL,
            max_iterations: DEFAULT_SECULAR_BUDGET,
            lambda_hint: None,
        }
    }
}

fn check_inputs(beta0: f64, delta: f64) -> Result<(), TrsError> {
    if !(beta0 > 0.0) || !beta0.is_finite() {
        return Err(TrsError::InvalidInput(format!(
            "beta0 must be positive, got {beta0}"
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(TrsError::InvalidInput(format!(
            "delta must be positive, got {delta}"
        )));
    }
    Ok(())
}

/// Solve `min β₀h₀ + ½hᵀTh, ‖h‖ ≤ Δ`, i.e. `(T+λI)h = −β₀e₁`.
pub fn solve_trs_tridiagonal(
    t: &SymmetricTridiagonal,
    beta0: f64,
    delta: f64,
    tol: f64,
) -> Result<TrsSolution, TrsError> {
    solve_trs_tridiagonal_with(
        t,
        beta0,
        delta,
        &TrsOptions {
            tol,
            ..TrsOptions::default()
        },
    )
}

pub fn solve_trs_tridiagonal_with(
    t: &SymmetricTridiagonal,
    beta0: f64,
    delta: f64,
    opts: &TrsOptions,
) -> Result<TrsSolution, TrsError> {
    check_inputs(beta0, delta)?;
    let m = t.order();
    let mut rhs = vec![0.0; m];
    rhs[0] = -beta0;

    // Interior: T ≻ 0 and the unconstrained minimizer is strictly inside.
    if let Ok(f) = ldl_shifted(t, 0.0) {
        let h = f.solve(&rhs);
        if norm2(&h) < delta {
            return Ok(TrsSolution {
                lambda: 0.0,
                h,
                case: CaseTag::Interior,
                secular_iterations: 0,
                kkt: None,
            });
        }
    }

    let theta_min = t.smallest_eigenvalue();
    let floor = (-theta_min).max(0.0);
    let mut lo = floor;
    let mut hi = beta0 / delta + t.norm_inf();
    let hard_gap = 1e-14 * (1.0 + theta_min.abs());

    let mut lambda = lo + (beta0 / delta - theta_min).max(1.0) * 1e-3;
    if let Some(hint) = opts.lambda_hint {
        if hint > lo && hint < hi {
            if let Ok(f) = ldl_shifted(t, hint) {
                if norm2(&f.solve(&rhs)) >= delta {
                    lo = hint;
                    lambda = hint;
                }
            }
        }
    }
    if !(lambda > lo && lambda < hi) && lambda != lo {
        lambda = 0.5 * (lo + hi);
    }

    // Iterate with the smallest boundary residual, for the exits where the
    // bracket or the Newton step has shrunk to floating resolution.
    let mut best: Option<(f64, f64, f64, Vec<f64>)> = None;
    let mut residual = f64::INFINITY;
    let mut stalled = false;
    for it in 1..=opts.max_iterations {
        let factor = match ldl_shifted(t, lambda) {
            Ok(f) => f,
            Err(_) => {
                lo = lo.max(lambda);
                lambda = 0.5 * (lo + hi);
                if hi - lo <= hard_gap {
                    break;
                }
                continue;
            }
        };
        let h = factor.solve(&rhs);
        let hn = norm2(&h);
        residual = (hn - delta).abs() / delta;
        if residual <= opts.tol {
            return Ok(TrsSolution {
                lambda,
                h,
                case: CaseTag::Boundary,
                secular_iterations: it,
                kkt: None,
            });
        }
        if hn > delta {
            lo = lo.max(lambda);
        } else {
            hi = hi.min(lambda);
        }
        let w = factor.solve(&h);
        let step = (hn - delta) / delta * (hn * hn) / dot(&h, &w);
        let next = lambda + step;
        if best.as_ref().is_none_or(|b| residual < b.0) {
            // −d‖h‖/dλ = hᵀ(T+λI)⁻¹h / ‖h‖
            best = Some((residual, lambda, dot(&h, &w) / hn, h));
        }
        if step.abs() <= 4.0 * f64::EPSILON * lambda.abs().max(1.0) {
            stalled = true;
            break;
        }
        lambda = if next > lo && next < hi && next.is_finite() {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= hard_gap {
            break;
        }
    }

    if stalled || hi - lo <= hard_gap {
        if let Some((res, lam, slope, h)) = best {
            // λ is resolved to roundoff; accept if ‖h‖ = Δ holds to the level
            // a few ulps of λ can reach.
            let reachable = 8.0 * f64::EPSILON * lam.abs().max(1.0) * slope / delta;
            if res <= RESOLVED_BOUNDARY_TOL.max(reachable.min(UNRESOLVED_BOUNDARY_CAP)) {
                return Ok(TrsSolution {
                    lambda: lam,
                    h,
                    case: CaseTag::Boundary,
                    secular_iterations: opts.max_iterations,
                    kkt: None,
                });
            }
            // Otherwise ‖h(λ)‖ jumps past Δ between adjacent floats: the
            // pole at −θ_min carries too little weight to resolve.
            return Err(TrsError::NearHardCase {
                lambda: lam,
                h_norm: norm2(&h),
                gap: hi - floor,
            });
        }
    }
    Err(TrsError::NoConvergence {
        iterations: opts.max_iterations,
        residual,
    })
}

/// Brute-force oracle: eigendecompose `A`, then solve the explicit secular
/// equation with [`solve_trs_eigenbasis`].
pub fn solve_trs_dense(
    a: &DenseSymmetric,
    g: &[f64],
    delta: f64,
    tol: f64,
) -> Result<TrsSolution, TrsError> {
    let m = a.order();
    if m > DENSE_ORACLE_CAP {
        return Err(TrsError::InvalidInput(format!(
            "dense oracle limited to order {DENSE_ORACLE_CAP}, got {m}"
        )));
    }
    if g.len() != m {
        return Err(LinalgError::DimensionMismatch {
            expected: m,
            got: g.len(),
        }
        .into());
    }
    check_inputs(norm2(g), delta)?;
    let eig = symmetric_eig_dense(a, 1e-14)?;
    let c = eig.vectors.matvec_transpose(g);
    let mut sol = solve_trs_eigenbasis(&eig.values, &c, delta, tol)?;
    sol.h = eig.vectors.matvec(&sol.h);
    Ok(sol)
}

/// TRS for `A = diag(θ)` with gradient `c`, by bisection of
/// `Σ cᵢ²/(θᵢ+λ)² = Δ²` down to floating resolution. `θ` may be unsorted;
/// the returned `h` is in the same coordinates.
pub fn solve_trs_eigenbasis(
    theta: &[f64],
    c: &[f64],
    delta: f64,
    tol: f64,
) -> Result<TrsSolution, TrsError> {
    if theta.len() != c.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: theta.len(),
            got: c.len(),
        }
        .into());
    }
    if theta.iter().chain(c).any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite.into());
    }
    let gn = norm2(c);
    check_inputs(gn, delta)?;
    let theta_min = theta.iter().copied().fold(f64::INFINITY, f64::min);
    let theta_abs = theta.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let scale = theta_abs.max(gn / delta);

    let norm_at = |lam: f64| -> f64 {
        theta
            .iter()
            .zip(c)
            .map(|(th, ci)| {
                let d = th + lam;
                if d == 0.0 {
                    if *ci == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (ci / d).powi(2)
                }
            })
            .sum::<f64>()
            .sqrt()
    };
    let build = |lam: f64| -> Vec<f64> {
        theta
            .iter()
            .zip(c)
            .map(|(th, ci)| {
                if th + lam == 0.0 {
                    0.0
                } else {
                    -ci / (th + lam)
                }
            })
            .collect()
    };

    if theta_min > 0.0 && norm_at(0.0) < delta {
        return Ok(TrsSolution {
            lambda: 0.0,
            h: build(0.0),
            case: CaseTag::Interior,
            secular_iterations: 0,
            kkt: None,
        });
    }

    let floor = (-theta_min).max(0.0);
    // Components along the bottom eigenspace; "zero" means the pole at
    // -θ_min is absent and ‖s(λ)‖ stays bounded as λ → -θ_min.
    let pole_tol = 1e-14 * scale.max(1.0);
    let pole_weight: f64 = theta
        .iter()
        .zip(c)
        .filter(|(th, _)| (*th - theta_min).abs() <= pole_tol)
        .map(|(_, ci)| ci * ci)
        .sum::<f64>()
        .sqrt();
    if theta_min <= 0.0 && pole_weight <= 1e-13 * gn {
        let rest = theta
            .iter()
            .zip(c)
            .filter(|(th, _)| (*th - theta_min).abs() > pole_tol)
            .map(|(th, ci)| (ci / (th + floor)).powi(2))
            .sum::<f64>()
            .sqrt();
        if rest <= delta {
            return Err(TrsError::NearHardCase {
                lambda: floor,
                h_norm: rest,
                gap: pole_weight,
            });
        }
    }

    let mut lo = floor;
    let mut hi = gn / delta + theta_abs + 1.0;
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || iterations > 4000 {
            break;
        }
        iterations += 1;
        if norm_at(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // hi is the right end of the final bracket, so A + hi·I ≻ 0.
    let lambda = hi;
    let h = build(lambda);
    let residual = (norm2(&h) - delta).abs() / delta;
    if residual > tol.max(1e-10) {
        return Err(TrsError::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(TrsSolution {
        lambda,
        h,
        case: CaseTag::Boundary,
        secular_iterations: iterations,
        kkt: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `Δ − ‖s‖`; negative means infeasible.
    pub feasibility_gap: f64,
    /// `‖(A+λI)s + g‖`
    pub stationarity: f64,
    /// `λ(Δ − ‖s‖)`
    pub complementarity: f64,
    /// `θ_min(A) + λ`
    pub curvature_margin: f64,
    pub passed: bool,
}

/// Smallest eigenvalue of an operator: exact for diagonal storage, Sturm
/// bisection after Householder reduction for small dense storage, Lanczos
/// Ritz value otherwise (an upper estimate).
pub fn smallest_eigenvalue_estimate(a: &dyn SymmetricLinearOperator) -> f64 {
    match a.storage() {
        Storage::Diagonal(d) => d.iter().copied().fold(f64::INFINITY, f64::min),
        Storage::Dense(m) if m.rows() <= DENSE_ORACLE_CAP => m
            .to_symmetric(1e-12)
            .map(|s| s.tridiagonalize().smallest_eigenvalue())
            .unwrap_or(f64::NAN),
        _ => {
            let n = a.dim();
            extremal_eigenvalues(a, 0x5eed, 1e-12, n.min(400)).min
        }
    }
}

/// The four optimality residuals at `(λ, s)`.
pub fn check_kkt(
    a: &dyn SymmetricLinearOperator,
    g: &[f64],
    delta: f64,
    lambda: f64,
    s: &[f64],
    tol: f64,
) -> KktReport {
    let mut r = a.apply_vec(s);
    axpy(lambda, s, &mut r);
    axpy(1.0, g, &mut r);
    let stationarity = norm2(&r);
    let sn = norm2(s);
    let feasibility_gap = delta - sn;
    let complementarity = lambda * feasibility_gap;
    let curvature_margin = smallest_eigenvalue_estimate(a) + lambda;
    let scale = 1.0 + lambda.abs();
    let passed = feasibility_gap >= -tol * delta
        && stationarity <= tol * norm2(g).max(1.0)
        && complementarity.abs() <= tol * scale * delta
        && lambda >= 0.0
        && curvature_margin >= -tol * scale;
    KktReport {
        feasibility_gap,
        stationarity,
        complementarity,
        curvature_margin,
        passed,
    }
}
