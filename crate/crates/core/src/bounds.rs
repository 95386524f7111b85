//! A-priori error bounds for the Krylov trust-region iterates, as explicit
//! scalar functions of the iteration index and spectral data.
//!
//! Index convention: `k` is the 0-based Lanczos index, so the Krylov space
//! behind iterate `k` has dimension `k+1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm2, solve_shifted, LinalgError, SymmetricTridiagonal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error(
        "shift is not positive definite: alpha_n + lambda = {0:e} <= 0 (hard or indefinite case)"
    )]
    HardOrIndefiniteShift(f64),
    #[error("convergence factor t = {0} is outside (0, 1)")]
    DegenerateT(f64),
    #[error("degenerate spectrum: alpha_1 = alpha_n = {0}")]
    DegenerateSpectrum(f64),
    #[error("separation {0:e} is not positive; bound inapplicable")]
    NonpositiveSep(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Spectral data of `A + λ_opt I` that drives every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumData {
    /// Largest eigenvalue of `A`.
    pub alpha1: f64,
    /// Smallest eigenvalue of `A`.
    pub alpha_n: f64,
    pub lambda_opt: f64,
    /// `(α₁+λ)/(α_n+λ)`
    pub kappa: f64,
    /// `(√κ−1)/(√κ+1)`
    pub t: f64,
    /// `(κ+1)/(κ−1)`; infinite when `κ = 1`.
    pub eta: f64,
    pub beta0: f64,
    pub delta: f64,
}

pub fn spectrum_data(
    alpha1: f64,
    alpha_n: f64,
    lambda_opt: f64,
    beta0: f64,
    delta: f64,
) -> Result<SpectrumData, BoundsError> {
    let low = alpha_n + lambda_opt;
    if !(low > 0.0) {
        return Err(BoundsError::HardOrIndefiniteShift(low));
    }
    let kappa = ((alpha1 + lambda_opt) / low).max(1.0);
    let rk = kappa.sqrt();
    let t = (rk - 1.0) / (rk + 1.0);
    let eta = if kappa > 1.0 {
        (kappa + 1.0) / (kappa - 1.0)
    } else {
        f64::INFINITY
    };
    Ok(SpectrumData {
        alpha1,
        alpha_n,
        lambda_opt,
        kappa,
        t,
        eta,
        beta0,
        delta,
    })
}

/// `η − √(η²−1)`, written as `1/(η + √(η²−1))` to avoid cancellation.
pub fn t_from_eta(eta: f64) -> f64 {
    if eta.is_infinite() {
        return 0.0;
    }
    1.0 / (eta + (eta * eta - 1.0).sqrt())
}

impl SpectrumData {
    /// `α₁ + λ_opt`
    pub fn top(&self) -> f64 {
        self.alpha1 + self.lambda_opt
    }

    /// `α_n + λ_opt`
    pub fn bottom(&self) -> f64 {
        self.alpha_n + self.lambda_opt
    }

    fn pow(&self, e: usize) -> f64 {
        self.t.powi(e as i32)
    }
}

/// `(1 + (k+2)/|ln t|)`, the polynomial-degree growth factor; 1 when `t = 0`.
fn growth(k: usize, t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        1.0 + (k as f64 + 2.0) / t.ln().abs()
    }
}

/// `2t^{k+1}`: relative distance of `s_opt` (and of `y₁`) from the Krylov
/// space of dimension `k+1`.
pub fn cg_distance_bound(k: usize, sd: &SpectrumData) -> f64 {
    2.0 * sd.pow(k + 1)
}

/// `Σ_{j=0}^{k} (j+1) tʲ U_j(x)` with the standard second-kind recurrence.
pub fn generating_partial_sum(k_trunc: usize, t: f64, x: f64) -> f64 {
    let mut u_prev = 0.0; // U_{-1}
    let mut u = 1.0; // U_0
    let mut tj = 1.0;
    let mut sum = 0.0;
    for j in 0..=k_trunc {
        sum += (j as f64 + 1.0) * tj * u;
        let next = 2.0 * x * u - u_prev;
        u_prev = u;
        u = next;
        tj *= t;
    }
    sum
}

/// Closed form of the full series: `(1−t²)/(1+t²−2tx)²`.
pub fn generating_closed_form(t: f64, x: f64) -> f64 {
    let d = 1.0 + t * t - 2.0 * t * x;
    (1.0 - t * t) / (d * d)
}

/// The truncated polynomial `p(x) = 4t²/(1−t²)·Σ_{j≤k}(j+1)tʲU_j(x)`
/// approximating `1/(x−η)²` on `[−1, 1]`, with `t = η − √(η²−1)`.
pub fn cheb_gen_poly_eval(k_trunc: usize, eta: f64, x: f64) -> f64 {
    let t = t_from_eta(eta);
    4.0 * t * t / (1.0 - t * t) * generating_partial_sum(k_trunc, t, x)
}

/// `max |1/(x−η)² − p(x)|` over `points` equispaced nodes of `[−1, 1]`.
pub fn cheb_grid_error(k_trunc: usize, eta: f64, points: usize) -> f64 {
    assert!(points >= 2);
    (0..points)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
            (1.0 / ((x - eta) * (x - eta)) - cheb_gen_poly_eval(k_trunc, eta, x)).abs()
        })
        .fold(0.0, f64::max)
}

/// `(1 + (k+2)/|ln t|)·(4/(1−t²))·t^{k+3}` for a bare `t`.
pub fn epsilon2_bound_t(k: usize, t: f64) -> Result<f64, BoundsError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(BoundsError::DegenerateT(t));
    }
    Ok(growth(k, t) * 4.0 / (1.0 - t * t) * t.powi(k as i32 + 3))
}

/// Best-approximation error bound for `1/(x−η)²` by degree-`k` polynomials.
pub fn epsilon2_bound(k: usize, sd: &SpectrumData) -> Result<f64, BoundsError> {
    epsilon2_bound_t(k, sd.t)
}

/// Bound on `‖(I−π_k)y₂‖`:
/// `16(α₁+λ)‖y₁‖/((α₁−α_n)²(1−t²))·(1+(k+2)/|ln t|)·t^{k+3}`.
pub fn y2_distance_bound(k: usize, sd: &SpectrumData, y1_norm: f64) -> Result<f64, BoundsError> {
    let width = sd.alpha1 - sd.alpha_n;
    if width == 0.0 {
        return Err(BoundsError::DegenerateSpectrum(sd.alpha1));
    }
    if sd.t == 0.0 {
        return Ok(0.0);
    }
    let t = sd.t;
    Ok(16.0 * sd.top() * y1_norm / (width * width * (1.0 - t * t))
        * growth(k, t)
        * t.powi(k as i32 + 3))
}

/// `c_k = 2 + 16(α₁+λ)/((α₁−α_n)²(1−t²))·(1+(k+2)/|ln t|)·t²`.
pub fn ck_factor(k: usize, sd: &SpectrumData) -> Result<f64, BoundsError> {
    let width = sd.alpha1 - sd.alpha_n;
    if width == 0.0 {
        return Err(BoundsError::DegenerateSpectrum(sd.alpha1));
    }
    if sd.t == 0.0 {
        return Ok(2.0);
    }
    let t = sd.t;
    if t >= 1.0 {
        return Err(BoundsError::DegenerateT(t));
    }
    Ok(2.0 + 16.0 * sd.top() / (width * width * (1.0 - t * t)) * growth(k, t) * t * t)
}

/// `c_k‖y₁‖t^{k+1}`: bound on `sin∠(y, S̃_k)`.
pub fn sin_subspace_bound(k: usize, sd: &SpectrumData, y1_norm: f64) -> Result<f64, BoundsError> {
    Ok(ck_factor(k, sd)? * y1_norm * sd.pow(k + 1))
}

/// `c_k·s(λ_k)·γ̃_k·‖y₁‖·t^{k+1}`. Asymptotic and a large overestimate in
/// practice; reported as a diagnostic only.
pub fn first_lambda_bound(
    k: usize,
    sd: &SpectrumData,
    spectral_condition: f64,
    gamma_tilde: f64,
    y1_norm: f64,
) -> Result<f64, BoundsError> {
    Ok(ck_factor(k, sd)? * spectral_condition * gamma_tilde * y1_norm * sd.pow(k + 1))
}

/// `(4Δ/β₀)·t^{2(k+1)}`: bound on `e₁ᵀ(T_final+λI)⁻¹e₁ − e₁ᵀ(T_k+λI)⁻¹e₁`.
pub fn cg_energy_bound(k: usize, sd: &SpectrumData) -> f64 {
    4.0 * sd.delta / sd.beta0 * sd.pow(2 * (k + 1))
}

/// The two multiplier-bound factors at iterate `k` and their
/// `k`-independent caps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaFactors {
    pub eta1: f64,
    pub eta2: f64,
    pub eta1_cap: f64,
    pub eta2_cap: f64,
}

/// `η_{k1} = β₀²/(Δ² + β₀²‖(T_k+λI)⁻¹e₁‖²)`, `η_{k2} = 2/(same)`.
pub fn eta_factors(
    t: &SymmetricTridiagonal,
    lambda_opt: f64,
    beta0: f64,
    delta: f64,
    alpha1: f64,
) -> Result<EtaFactors, BoundsError> {
    let mut e1 = vec![0.0; t.order()];
    e1[0] = 1.0;
    let w = solve_shifted(t, lambda_opt, &e1)?;
    let wn = norm2(&w);
    let den = delta * delta + beta0 * beta0 * wn * wn;
    let top = alpha1 + lambda_opt;
    let cap_den = beta0 * beta0 + top * top * delta * delta;
    Ok(EtaFactors {
        eta1: beta0 * beta0 / den,
        eta2: 2.0 / den,
        eta1_cap: beta0 * beta0 * top * top / cap_den,
        eta2_cap: 2.0 * top * top / cap_den,
    })
}

/// `(4η₁Δ/β₀ + 8(α₁+λ)η₂Δ²)·t^{2(k+1)}`: bound on `λ_opt − λ_k`.
pub fn lambda_gap_bound(k: usize, sd: &SpectrumData, eta1: f64, eta2: f64) -> f64 {
    let d = sd.delta;
    (4.0 * eta1 * d / sd.beta0 + 8.0 * sd.top() * eta2 * d * d) * sd.pow(2 * (k + 1))
}

/// `8(α₁+λ)Δ²·t^{2(k+1)}`: bound on `q(s_k) − q(s_opt)`.
pub fn q_gap_bound(k: usize, sd: &SpectrumData) -> f64 {
    8.0 * sd.top() * sd.delta * sd.delta * sd.pow(2 * (k + 1))
}

/// `c_k·(1 + ‖M‖/sep)·t^{k+1}`: bound on `sin∠(s_k, s_opt)`, with the
/// perturbation term `ε_k` taken as zero.
pub fn sin_angle_bound(
    k: usize,
    sd: &SpectrumData,
    norm_m: f64,
    sep: f64,
) -> Result<f64, BoundsError> {
    if !(sep > 0.0) {
        return Err(BoundsError::NonpositiveSep(sep));
    }
    Ok(ck_factor(k, sd)? * (1.0 + norm_m / sep) * sd.pow(k + 1))
}

/// `4√κ·Δ·t^{k+1}`: bound on `‖s_k − s_opt‖`.
pub fn s_gap_bound(k: usize, sd: &SpectrumData) -> f64 {
    4.0 * sd.kappa.sqrt() * sd.delta * sd.pow(k + 1)
}

/// `(4η₁Δ²/β₀ + 8(α₁+λ)η₂Δ³)·t^{2(k+1)} + 4√κ·Δ·(α₁+λ)·t^{k+1}`: bound on
/// `‖(A+λ_kI)s_k + g‖`.
pub fn residual_bound(k: usize, sd: &SpectrumData, eta1: f64, eta2: f64) -> f64 {
    let d = sd.delta;
    (4.0 * eta1 * d * d / sd.beta0 + 8.0 * sd.top() * eta2 * d * d * d) * sd.pow(2 * (k + 1))
        + 4.0 * sd.kappa.sqrt() * d * sd.top() * sd.pow(k + 1)
}

/// Per-`k` values of every bound, aligned with a run's history.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundSeries {
    pub lambda_gap: Vec<f64>,
    pub q_gap: Vec<f64>,
    pub sin_angle: Vec<f64>,
    pub residual: Vec<f64>,
    pub s_gap: Vec<f64>,
    pub cg_energy: Vec<f64>,
    pub cg_distance: Vec<f64>,
    pub sin_subspace: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn spectrum_data_examples() {
        // λ is rounded to 4 decimals and dκ/dλ ≈ −73 here
        let sd = spectrum_data(2.0, -2.0, 2.2333, 1.0, 1.0).unwrap();
        assert!((sd.kappa - 18.1481).abs() < 5e-3, "{}", sd.kappa);
        assert!((sd.t - 0.6198).abs() < 5e-5);
        let sd = spectrum_data(8.0, -2.0, 2.9850, 1.0, 1.0).unwrap();
        assert!((sd.kappa - 11.1518).abs() < 1e-3);
        assert!((sd.t - 0.5391).abs() < 5e-5);
        let sd = spectrum_data(3.0, 3.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(sd.kappa, 1.0);
        assert_eq!(sd.t, 0.0);
    }

    #[test]
    fn indefinite_shift_is_rejected() {
        assert!(matches!(
            spectrum_data(2.0, -2.0, 2.0, 1.0, 1.0),
            Err(BoundsError::HardOrIndefiniteShift(_))
        ));
    }

    #[test]
    fn t_formulas_agree() {
        for kappa in [1.5f64, 18.1481, 1e3, 1e6] {
            let rk: f64 = kappa.sqrt();
            let t1 = (rk - 1.0) / (rk + 1.0);
            let t2 = t_from_eta((kappa + 1.0) / (kappa - 1.0));
            assert!((t1 - t2).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_bound_values() {
        let sd = SpectrumData {
            t: 0.5,
            ..spectrum_data(2.0, -2.0, 3.0, 1.0, 1.0).unwrap()
        };
        assert_eq!(cg_distance_bound(0, &sd), 1.0);
        assert!((cg_energy_bound(1, &sd) - 0.25).abs() < 1e-15);
        let e = epsilon2_bound_t(0, 0.5).unwrap();
        assert!((e - (1.0 + 2.0 / 2f64.ln()) * (4.0 / 0.75) * 0.125).abs() < 1e-14);
        assert!((e - 2.590).abs() < 1e-3);
        assert_eq!(epsilon2_bound_t(3, 0.0).unwrap(), 0.0);
        assert!(matches!(
            epsilon2_bound_t(0, 1.0),
            Err(BoundsError::DegenerateT(_))
        ));
    }

    #[test]
    fn s_gap_for_kappa_four() {
        let sd = spectrum_data(4.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert!((s_gap_bound(0, &sd) - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn ck_at_example_parameters() {
        let mut sd = spectrum_data(2.0, -2.0, 2.2333, 1.0, 1.0).unwrap();
        sd.t = 0.6198;
        let c = ck_factor(10, &sd).unwrap();
        let hand = 2.0
            + 16.0 * 4.2333 / (16.0 * (1.0 - 0.6198f64.powi(2)))
                * (1.0 + 12.0 / 0.6198f64.ln().abs())
                * 0.6198f64.powi(2);
        assert!(close(c, hand, 1e-14));
        assert!((c - 70.9).abs() < 0.2, "{c}");
    }

    #[test]
    fn degenerate_spectrum() {
        let sd = spectrum_data(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            ck_factor(0, &sd),
            Err(BoundsError::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn eta_factors_scalar() {
        let t = SymmetricTridiagonal::new(vec![1.0], vec![]).unwrap();
        let e = eta_factors(&t, 1.0, 2.0, 1.0, 1.0).unwrap();
        assert!((e.eta1 - 2.0).abs() < 1e-15 && (e.eta2 - 1.0).abs() < 1e-15);
        assert!((e.eta1_cap - 2.0).abs() < 1e-15);
        assert!((e.eta2 / e.eta1 - 2.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn generating_series_at_origin() {
        let s = generating_partial_sum(60, 0.5, 0.0);
        assert!((s - 0.48).abs() < 1e-6);
        assert!((generating_closed_form(0.5, 0.0) - 0.48).abs() < 1e-15);
        let eta = (1.0 + 0.25) / (2.0 * 0.5);
        assert!((cheb_gen_poly_eval(0, eta, 0.3) - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn sin_angle_needs_positive_sep() {
        let sd = spectrum_data(2.0, -2.0, 2.5, 1.0, 1.0).unwrap();
        assert!(matches!(
            sin_angle_bound(3, &sd, 5.0, 0.0),
            Err(BoundsError::NonpositiveSep(_))
        ));
        let far = sin_angle_bound(3, &sd, 5.0, 1e300).unwrap();
        assert!(close(far, ck_factor(3, &sd).unwrap() * sd.t.powi(4), 1e-14));
    }
}
