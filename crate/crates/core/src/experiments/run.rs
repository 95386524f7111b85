use serde::Serialize;

use super::generate::{generate, Problem};
use super::reference::{reference_solution, ReferenceSolution};
use super::{ExperimentError, ProblemSpec};
use crate::bounds::{
    cg_distance_bound, cg_energy_bound, eta_factors, first_lambda_bound, lambda_gap_bound,
    q_gap_bound, residual_bound, s_gap_bound, sin_angle_bound, sin_subspace_bound,
    y2_distance_bound, EtaFactors,
};
use crate::eig_equiv::{
    assemble_projected_m, eigpair_from_trs_with, gamma_tilde, separation, solution_sine,
    spectral_condition, subspace_sine, AugmentedOperator,
};
use crate::gltr::{gltr_solve, GltrOptions, TerminationReason};
use crate::linalg::{distance, norm2, solve_shifted};
use crate::trs::CaseTag;

/// The experiment runs continue well past the usual stopping point so the
/// error curves reach the rounding floor.
pub const EXPERIMENT_RESID_TOL: f64 = 1e-15;
pub const EXPERIMENT_K_MAX: usize = 300;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub k_max: usize,
    pub resid_tol: f64,
    /// Evaluate `γ̃_k` and the first multiplier bound every this many
    /// iterations (expensive; off when `None`).
    pub gamma_stride: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            k_max: EXPERIMENT_K_MAX,
            resid_tol: EXPERIMENT_RESID_TOL,
            gamma_stride: None,
        }
    }
}

/// One table row. Missing values are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub k: usize,
    pub lambda_gap: f64,
    pub lambda_gap_bound: f64,
    pub sin_angle: f64,
    pub sin_angle_bound: f64,
    pub q_gap: f64,
    pub q_gap_bound: f64,
    pub resid: f64,
    pub resid_formula: f64,
    pub resid_bound: f64,
    pub s_gap: f64,
    pub s_gap_bound: f64,
    pub cg_gap: f64,
    pub cg_gap_bound: f64,
}

impl ExperimentRow {
    /// Values in CSV column order, without `k`.
    pub fn values(&self) -> [f64; 13] {
        [
            self.lambda_gap,
            self.lambda_gap_bound,
            self.sin_angle,
            self.sin_angle_bound,
            self.q_gap,
            self.q_gap_bound,
            self.resid,
            self.resid_formula,
            self.resid_bound,
            self.s_gap,
            self.s_gap_bound,
            self.cg_gap,
            self.cg_gap_bound,
        ]
    }

    pub fn from_values(k: usize, v: [f64; 13]) -> Self {
        ExperimentRow {
            k,
            lambda_gap: v[0],
            lambda_gap_bound: v[1],
            sin_angle: v[2],
            sin_angle_bound: v[3],
            q_gap: v[4],
            q_gap_bound: v[5],
            resid: v[6],
            resid_formula: v[7],
            resid_bound: v[8],
            s_gap: v[9],
            s_gap_bound: v[10],
            cg_gap: v[11],
            cg_gap_bound: v[12],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    pub fn column(&self, f: impl Fn(&ExperimentRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

/// Per-iteration quantities that do not go into the CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RowDiagnostics {
    pub k: usize,
    pub lambda: f64,
    pub case: CaseTag,
    /// Closed-form `q(s_k)`.
    pub q: f64,
    /// `gᵀs_k + ½s_kᵀAs_k`.
    pub q_direct: f64,
    pub eta: Option<EtaFactors>,
    /// Both multiplier-type bounds with the `k`-independent η caps.
    pub lambda_gap_bound_capped: f64,
    pub resid_bound_capped: f64,
    /// `sep(λ_opt, C_k)`.
    pub sep: f64,
    /// `‖M_k z − λ_k z‖ / ‖M_k‖` (largest column norm as the scale).
    pub eigpair_residual: f64,
    /// `s(λ_k)` of the projected pair.
    pub spectral_condition: f64,
    /// `sin∠(y, S̃_k)` and its bound.
    pub sin_subspace: f64,
    pub sin_subspace_bound: f64,
    /// `‖(I−π_k)s_opt‖/‖s_opt‖` and `2t^{k+1}`.
    pub cg_distance: f64,
    pub cg_distance_bound: f64,
    /// `‖(I−π_k)y₂‖` and its bound.
    pub y2_distance: f64,
    pub y2_distance_bound: f64,
    /// `2(α₁+λ_opt)‖π_k s_opt − s_opt‖²`, the intermediate objective bound.
    pub projection_q_bound: f64,
    /// `λ_opt − λ_k ≤ α_n + λ_opt`: the multiplier bounds apply.
    pub asymptotic_regime: bool,
    pub gamma_tilde: Option<f64>,
    pub first_lambda_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRun {
    pub spec: ProblemSpec,
    pub reference: ReferenceSolution,
    pub table: ExperimentTable,
    pub diagnostics: Vec<RowDiagnostics>,
    pub termination: TerminationReason,
}

impl ExperimentRun {
    /// First `k` at which the asymptotic multiplier bounds apply.
    pub fn asymptotic_start(&self) -> Option<usize> {
        self.diagnostics
            .iter()
            .find(|d| d.asymptotic_regime)
            .map(|d| d.k)
    }
}

pub fn run_experiment(
    spec: &ProblemSpec,
    opts: &RunOptions,
) -> Result<ExperimentRun, ExperimentError> {
    let problem = generate(spec)?;
    let reference = reference_solution(&problem)?;
    run_problem(&problem, reference, opts)
}

fn nan_or<E>(r: Result<f64, E>) -> f64 {
    r.unwrap_or(f64::NAN)
}

pub fn run_problem(
    problem: &Problem,
    reference: ReferenceSolution,
    opts: &RunOptions,
) -> Result<ExperimentRun, ExperimentError> {
    let a = &problem.a;
    let g = &problem.g;
    let delta = problem.spec.delta;
    let gltr_opts = GltrOptions {
        resid_tol: opts.resid_tol,
        k_max: opts.k_max,
        verify_residuals: true,
        keep_iterates: true,
        ..GltrOptions::default()
    };
    let result = gltr_solve(a, g, delta, &gltr_opts)?;
    let f = &result.factorization;
    let iterates = result.iterates.as_ref().expect("iterates kept");
    let sd = reference.spectrum;
    let beta0 = f.beta0();
    let lam = reference.lambda_opt;
    let s_opt = &reference.s_opt;
    let s_opt_norm = norm2(s_opt);
    // e₁ᵀ(T+λ_opt I)⁻¹e₁ over the whole space equals −gᵀs_opt/β₀².
    let full_energy = -crate::linalg::dot(g, s_opt) / (beta0 * beta0);
    let aug = AugmentedOperator::new(a, g, delta);

    let mut rows = Vec::with_capacity(result.history.len());
    let mut diagnostics = Vec::with_capacity(result.history.len());
    for (rec, h) in result.history.iter().zip(iterates) {
        let k = rec.k;
        let t = f.t().leading(k + 1);
        let sk = f.combine(h);

        let eta = eta_factors(&t, lam, beta0, delta, sd.alpha1).ok();
        let (lambda_bound, resid_bnd, lambda_cap, resid_cap) = match eta {
            Some(e) => (
                lambda_gap_bound(k, &sd, e.eta1, e.eta2),
                residual_bound(k, &sd, e.eta1, e.eta2),
                lambda_gap_bound(k, &sd, e.eta1_cap, e.eta2_cap),
                residual_bound(k, &sd, e.eta1_cap, e.eta2_cap),
            ),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };

        let mut e1 = vec![0.0; k + 1];
        e1[0] = 1.0;
        let energy_k = solve_shifted(&t, lam, &e1)
            .map(|x| x[0])
            .unwrap_or(f64::NAN);

        let (sep, eig_res, cond, z_ok) = if rec.case == CaseTag::Boundary {
            let mk = assemble_projected_m(&t, beta0, delta);
            match eigpair_from_trs_with(&mk, &t, rec.lambda, h) {
                Ok(pair) => {
                    let sep = nan_or(separation(&mk.matrix, &pair.stacked(), lam));
                    let cond = nan_or(spectral_condition(&t, rec.lambda, &pair.z1));
                    (sep, pair.relative_residual, cond, true)
                }
                Err(_) => (f64::NAN, f64::NAN, f64::NAN, false),
            }
        } else {
            (f64::NAN, f64::NAN, f64::NAN, false)
        };
        let sine_bound = if z_ok {
            nan_or(sin_angle_bound(k, &sd, reference.norm_m, sep))
        } else {
            f64::NAN
        };

        let sine = solution_sine(&sk, s_opt).0;
        let cols = k + 1;
        let dist_s = f.distance_to_span(s_opt, cols);
        let dist_y2 = f.distance_to_span(&reference.y2, cols);
        let (gamma, first_bound) = match opts.gamma_stride {
            Some(stride) if stride > 0 && k % stride == 0 => {
                let gt = gamma_tilde(&aug, f, cols, 1e-8, 0x5eed_0003 + k as u64);
                (
                    Some(gt),
                    first_lambda_bound(k, &sd, cond, gt, reference.y1_norm).ok(),
                )
            }
            _ => (None, None),
        };

        rows.push(ExperimentRow {
            k,
            lambda_gap: lam - rec.lambda,
            lambda_gap_bound: lambda_bound,
            sin_angle: sine,
            sin_angle_bound: sine_bound,
            q_gap: rec.q - reference.q_opt,
            q_gap_bound: q_gap_bound(k, &sd),
            resid: rec.resid_explicit.unwrap_or(f64::NAN),
            resid_formula: rec.resid_formula,
            resid_bound: resid_bnd,
            s_gap: distance(&sk, s_opt),
            s_gap_bound: s_gap_bound(k, &sd),
            cg_gap: full_energy - energy_k,
            cg_gap_bound: cg_energy_bound(k, &sd),
        });
        diagnostics.push(RowDiagnostics {
            k,
            lambda: rec.lambda,
            case: rec.case,
            q: rec.q,
            q_direct: rec.q_direct.unwrap_or(f64::NAN),
            eta,
            lambda_gap_bound_capped: lambda_cap,
            resid_bound_capped: resid_cap,
            sep,
            eigpair_residual: eig_res,
            spectral_condition: cond,
            sin_subspace: subspace_sine(&reference.y1, &reference.y2, f, cols),
            sin_subspace_bound: nan_or(sin_subspace_bound(k, &sd, reference.y1_norm)),
            cg_distance: dist_s / s_opt_norm,
            cg_distance_bound: cg_distance_bound(k, &sd),
            y2_distance: dist_y2,
            y2_distance_bound: nan_or(y2_distance_bound(k, &sd, reference.y1_norm)),
            projection_q_bound: 2.0 * sd.top() * dist_s * dist_s,
            asymptotic_regime: lam - rec.lambda <= sd.bottom(),
            gamma_tilde: gamma,
            first_lambda_bound: first_bound,
        });
    }

    Ok(ExperimentRun {
        spec: problem.spec.clone(),
        reference,
        table: ExperimentTable { rows },
        diagnostics,
        termination: result.termination,
    })
}
