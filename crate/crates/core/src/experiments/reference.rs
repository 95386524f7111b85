use serde::Serialize;

use super::generate::{Problem, ProblemOperator, SPECTRUM_SEED};
use super::ExperimentError;
use crate::bounds::{spectrum_data, SpectrumData};
use crate::eig_equiv::{full_space_eigenpair, AugmentedOperator};
use crate::gltr::{gltr_solve, objective, GltrOptions};
use crate::lanczos::extremal_eigenvalues;
use crate::linalg::{norm2, operator_norm2, solve_shifted_cg, Storage, SymmetricLinearOperator};
use crate::trs::{check_kkt, solve_trs_eigenbasis, CaseTag, KktReport, DENSE_ORACLE_CAP};

/// Residual tolerance of the GLTR run used when no eigenbasis is available.
pub const REFERENCE_RESID_TOL: f64 = 1e-14;
pub const REFERENCE_KKT_TOL: f64 = 1e-12;
const NORM_M_TOL: f64 = 1e-10;
const NORM_M_MAXIT: usize = 5000;
const NORM_M_SEED: u64 = 0x5eed_0002;

/// The "exact" solution every iterate is measured against.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSolution {
    pub lambda_opt: f64,
    #[serde(skip)]
    pub s_opt: Vec<f64>,
    pub q_opt: f64,
    pub alpha1: f64,
    pub alpha_n: f64,
    pub spectrum: SpectrumData,
    /// `‖M‖₂` of the augmented matrix.
    pub norm_m: f64,
    /// `‖y₁‖` of the unit eigenvector `(y₁; y₂)` of `M` for `λ_opt`.
    pub y1_norm: f64,
    #[serde(skip)]
    pub y1: Vec<f64>,
    #[serde(skip)]
    pub y2: Vec<f64>,
    pub case: CaseTag,
    pub kkt: KktReport,
    /// How `λ_opt` was obtained.
    pub method: &'static str,
}

/// Extremal eigenvalues `(α₁, α_n)`: exact when known by construction,
/// Sturm bisection for small dense storage, Lanczos otherwise.
fn extremes(a: &ProblemOperator) -> (f64, f64) {
    if let Some(d) = a.known_spectrum() {
        let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
        return (hi, lo);
    }
    if let Storage::Dense(m) = a.storage() {
        if m.rows() <= DENSE_ORACLE_CAP {
            if let Ok(s) = m.to_symmetric(1e-12) {
                let t = s.tridiagonalize();
                return (t.largest_eigenvalue(), t.smallest_eigenvalue());
            }
        }
    }
    let e = extremal_eigenvalues(a, SPECTRUM_SEED, 1e-12, a.dim().min(1000));
    (e.max, e.min)
}

pub fn reference_solution(p: &Problem) -> Result<ReferenceSolution, ExperimentError> {
    let a = &p.a;
    let g = &p.g;
    let delta = p.spec.delta;
    let n = a.dim();

    let (lambda, s, y2, q_projected, case, method) = match &p.a {
        ProblemOperator::Diagonal(_) | ProblemOperator::Similarity(_) => {
            let d = a.known_spectrum().expect("diagonal family");
            let mut c = g.clone();
            if let ProblemOperator::Similarity(h) = &p.a {
                h.to_eigenbasis(&mut c);
            }
            let sol = solve_trs_eigenbasis(d, &c, delta, 1e-14)?;
            let mut s = sol.h.clone();
            let mut y2: Vec<f64> = s
                .iter()
                .zip(d)
                .map(|(si, di)| si / (di + sol.lambda))
                .collect();
            if let ProblemOperator::Similarity(h) = &p.a {
                h.from_eigenbasis(&mut s);
                h.from_eigenbasis(&mut y2);
            }
            (
                sol.lambda,
                s,
                y2,
                None,
                sol.case,
                "secular equation in the eigenbasis",
            )
        }
        _ => {
            let opts = GltrOptions {
                resid_tol: REFERENCE_RESID_TOL,
                k_max: n.saturating_sub(1).min(3000),
                ..GltrOptions::default()
            };
            let r = gltr_solve(a, g, delta, &opts)?;
            let cg = solve_shifted_cg(a, r.lambda, &r.s, 1e-14, 20 * n);
            (
                r.lambda,
                r.s,
                cg.x,
                Some(r.q),
                r.case,
                "GLTR with complete reorthogonalization",
            )
        }
    };

    let (alpha1, alpha_n) = extremes(a);
    let kkt = check_kkt(a, g, delta, lambda, &s, REFERENCE_KKT_TOL);
    if !kkt.passed {
        return Err(ExperimentError::Reference(format!("{kkt:?}")));
    }
    let spectrum = spectrum_data(alpha1, alpha_n, lambda, norm2(g), delta)?;
    let pair = full_space_eigenpair(lambda, &s, y2);
    let m = AugmentedOperator::new(a, g, delta);
    let norm_m = operator_norm2(&m, NORM_M_TOL, NORM_M_MAXIT, NORM_M_SEED).value;
    // A dense matvec loses ~n·ε in q; the projected value does not.
    let q_opt = q_projected.unwrap_or_else(|| objective(a, g, &s));
    Ok(ReferenceSolution {
        lambda_opt: lambda,
        s_opt: s,
        q_opt,
        alpha1,
        alpha_n,
        spectrum,
        norm_m,
        y1_norm: norm2(&pair.z1),
        y1: pair.z1,
        y2: pair.z2,
        case,
        kkt,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{generate, Family, ProblemSpec};
    use crate::linalg::DiagonalOperator;

    #[test]
    fn scaled_identity_by_hand() {
        // A = I, ‖g‖ = 2, Δ = 1: λ = 1, s = −g/2, q = −2 + ½ = −1.5
        let spec = ProblemSpec::new(Family::Evenly1a, 3, 0);
        let p = Problem {
            spec,
            a: ProblemOperator::Diagonal(DiagonalOperator::new(vec![1.0; 3])),
            g: vec![0.0, 2.0, 0.0],
        };
        let r = reference_solution(&p).unwrap();
        assert!((r.lambda_opt - 1.0).abs() < 1e-14);
        assert!((r.q_opt + 1.5).abs() < 1e-14);
        assert!(r.kkt.passed);
    }

    #[test]
    fn chebyshev_extremes_round_to_five() {
        let p = generate(&ProblemSpec::new(Family::ChebNodes2, 1000, 1)).unwrap();
        let r = reference_solution(&p).unwrap();
        assert_eq!(format!("{:.4}", r.alpha1), "5.0000");
        assert_eq!(format!("{:.4}", r.alpha_n), "-5.0000");
        assert!(r.kkt.passed);
    }

    #[test]
    fn similarity_reference_matches_diagonal() {
        let mut spec = ProblemSpec::new(Family::Strakos3, 200, 2);
        let plain = reference_solution(&generate(&spec).unwrap()).unwrap();
        spec.params.similarity = Some(4);
        let rot = reference_solution(&generate(&spec).unwrap()).unwrap();
        assert!((plain.lambda_opt - rot.lambda_opt).abs() < 1e-13);
        assert!((plain.q_opt - rot.q_opt).abs() < 1e-13);
        assert!((plain.y1_norm - rot.y1_norm).abs() < 1e-12);
    }

    #[test]
    fn dense_reference_satisfies_kkt() {
        let p = generate(&ProblemSpec::new(Family::RandomSym4, 120, 4)).unwrap();
        let r = reference_solution(&p).unwrap();
        assert!(r.kkt.passed);
        assert_eq!(r.case, CaseTag::Boundary);
        assert!(r.spectrum.bottom() > 0.0);
    }
}
