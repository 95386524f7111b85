//! Helpers for reading convergence behaviour off a table: threshold
//! crossings, log-linear slopes, and bound dominance.

use serde::Serialize;

use super::run::{ExperimentRow, ExperimentRun, ExperimentTable};
use crate::bounds::sin_angle_bound;
use crate::trs::CaseTag;

/// Level below which measured errors are treated as rounding noise.
pub const FLOATING_FLOOR: f64 = 1e-14;

/// First `k` whose value is at most `threshold`.
pub fn first_below(
    table: &ExperimentTable,
    f: impl Fn(&ExperimentRow) -> f64,
    threshold: f64,
) -> Option<usize> {
    table.rows.iter().find(|r| f(r) <= threshold).map(|r| r.k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    /// Least-squares slope of `ln y` against `k`.
    pub slope: f64,
    pub intercept: f64,
    pub first_k: usize,
    pub last_k: usize,
    pub points: usize,
}

/// Least-squares fit of `ln y` against `k`; nonpositive or non-finite
/// values are skipped. `None` with fewer than two usable points.
pub fn fit_slope(ks: &[usize], ys: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.is_finite() && **y > 0.0)
        .map(|(k, y)| (*k as f64, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(SlopeFit {
        slope,
        intercept: my - slope * mx,
        first_k: pts[0].0 as usize,
        last_k: pts[pts.len() - 1].0 as usize,
        points: pts.len(),
    })
}

/// Index range `[start, end)` of the log-linear part of a decaying series:
/// from the first value at most `hi` up to (excluding) the first value
/// below `lo`. `None` when fewer than three points qualify.
pub fn linear_regime(values: &[f64], hi: f64, lo: f64) -> Option<(usize, usize)> {
    let start = values.iter().position(|v| *v <= hi)?;
    let end = values[start..]
        .iter()
        .position(|v| *v < lo)
        .map_or(values.len(), |p| start + p);
    (end >= start + 3).then_some((start, end))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub checked: usize,
    /// Rows in range whose bound could not be evaluated.
    pub unavailable: usize,
    /// `(k, measured, bound)` where the bound fell short.
    pub violations: Vec<(usize, f64, f64)>,
    /// Smallest `bound / measured` over the checked rows.
    pub min_ratio: f64,
    /// Level at which checking stopped being meaningful.
    pub floor: f64,
}

impl DominanceReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty() && self.checked > 0
    }
}

/// Checks `bound ≥ measured` for rows with `k ≥ start_k` until rounding
/// takes over. The effective floor is the larger of `floor` and the smallest
/// measured value above `floor` anywhere in the table (the level the run
/// actually attained). Checking stops at the first row where the measured
/// value or the bound is at or below that level.
pub fn dominance(
    table: &ExperimentTable,
    measured: impl Fn(&ExperimentRow) -> f64,
    bound: impl Fn(&ExperimentRow) -> f64,
    start_k: usize,
    floor: f64,
) -> DominanceReport {
    let attained = table
        .rows
        .iter()
        .map(&measured)
        .filter(|m| m.is_finite() && *m > floor)
        .fold(f64::INFINITY, f64::min);
    let floor = if attained.is_finite() {
        attained
    } else {
        floor
    };
    let mut rep = DominanceReport {
        checked: 0,
        unavailable: 0,
        violations: Vec::new(),
        min_ratio: f64::INFINITY,
        floor,
    };
    for r in table.rows.iter().filter(|r| r.k >= start_k) {
        let m = measured(r);
        let b = bound(r);
        if m <= floor || b <= floor {
            break;
        }
        if !b.is_finite() {
            rep.unavailable += 1;
            continue;
        }
        rep.checked += 1;
        rep.min_ratio = rep.min_ratio.min(b / m);
        if b < m {
            rep.violations.push((r.k, m, b));
        }
    }
    rep
}

/// Log-linear regime used for rate fits: from the first value at most
/// `REGIME_HI` to the first value below `REGIME_LO`.
pub const REGIME_HI: f64 = 1e-2;
pub const REGIME_LO: f64 = 1e-12;

/// A fitted log-slope next to the rate the theory predicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCheck {
    pub quantity: &'static str,
    pub fit: Option<SlopeFit>,
    /// `2 ln t` or `ln t`.
    pub predicted: f64,
}

impl RateCheck {
    /// `slope / predicted`; NaN without a fit.
    pub fn ratio(&self) -> f64 {
        self.fit.map_or(f64::NAN, |f| f.slope / self.predicted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedDominance {
    pub quantity: &'static str,
    pub start_k: usize,
    pub report: DominanceReport,
}

/// Everything the acceptance and verification suites read off one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunAssessment {
    /// `max_k |resid_formula − resid| / (‖A‖Δ + ‖g‖)`.
    pub residual_identity: f64,
    /// `max_k |q_closed − q_direct| / |q_closed|`.
    pub objective_identity: f64,
    /// Largest scaled `‖M_k z − λ_k z‖` over boundary rows.
    pub eigpair_residual: f64,
    /// Largest `λ_k − λ_{k+1}` (positive means a decrease).
    pub lambda_decrease: f64,
    /// Largest `λ_k − λ_opt`.
    pub lambda_overshoot: f64,
    /// Largest `q_{k+1} − q_k`.
    pub q_increase: f64,
    pub dominance: Vec<NamedDominance>,
    pub rates: Vec<RateCheck>,
    pub bound_rates: Vec<RateCheck>,
    /// Local log-slope of the sine bound at `k = sine_bound_k` with the last
    /// computed `sep` held fixed.
    pub sine_bound_asymptotic: RateCheck,
    pub sine_bound_k: usize,
    pub k_lambda_gap_1e10: Option<usize>,
    pub k_resid_1e10: Option<usize>,
}

fn rate(
    table: &ExperimentTable,
    quantity: &'static str,
    f: impl Fn(&ExperimentRow) -> f64,
    predicted: f64,
) -> RateCheck {
    let values: Vec<f64> = table.rows.iter().map(&f).collect();
    let fit = linear_regime(&values, REGIME_HI, REGIME_LO).and_then(|(a, b)| {
        let ks: Vec<usize> = table.rows[a..b].iter().map(|r| r.k).collect();
        fit_slope(&ks, &values[a..b])
    });
    RateCheck {
        quantity,
        fit,
        predicted,
    }
}

pub fn assess_run(run: &ExperimentRun) -> RunAssessment {
    let table = &run.table;
    let re = &run.reference;
    let sd = &re.spectrum;
    let norm_a = re.alpha1.abs().max(re.alpha_n.abs());
    let resid_scale = norm_a * sd.delta + sd.beta0;
    let max_of = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, |m, x| m.max(x));

    let residual_identity = max_of(
        &mut table
            .rows
            .iter()
            .map(|r| (r.resid_formula - r.resid).abs() / resid_scale),
    );
    let diag = &run.diagnostics;
    let objective_identity = max_of(
        &mut diag
            .iter()
            .map(|d| (d.q - d.q_direct).abs() / d.q.abs().max(f64::MIN_POSITIVE)),
    );
    let eigpair_residual = max_of(
        &mut diag
            .iter()
            .filter(|d| d.case == CaseTag::Boundary)
            .map(|d| d.eigpair_residual),
    );
    let lambda_decrease = max_of(&mut diag.windows(2).map(|w| w[0].lambda - w[1].lambda)).max(0.0);
    let lambda_overshoot = diag
        .iter()
        .map(|d| d.lambda - re.lambda_opt)
        .fold(f64::NEG_INFINITY, f64::max);
    let q_increase = max_of(&mut diag.windows(2).map(|w| w[1].q - w[0].q)).max(0.0);

    let k0 = run.asymptotic_start().unwrap_or(usize::MAX);
    let fl = FLOATING_FLOOR;
    let dom =
        |quantity, start_k, floor, m: fn(&ExperimentRow) -> f64, b: fn(&ExperimentRow) -> f64| {
            NamedDominance {
                quantity,
                start_k,
                report: dominance(table, m, b, start_k, floor),
            }
        };
    let dominance = vec![
        dom(
            "lambda_gap",
            k0,
            fl * (sd.top()),
            |r| r.lambda_gap,
            |r| r.lambda_gap_bound,
        ),
        dom(
            "q_gap",
            0,
            fl * (1.0 + re.q_opt.abs()),
            |r| r.q_gap,
            |r| r.q_gap_bound,
        ),
        dom("sin_angle", 0, fl, |r| r.sin_angle, |r| r.sin_angle_bound),
        dom("s_gap", 0, fl * sd.delta, |r| r.s_gap, |r| r.s_gap_bound),
        dom(
            "resid",
            k0,
            fl * resid_scale,
            |r| r.resid,
            |r| r.resid_bound,
        ),
    ];

    let lt = sd.t.ln();
    let rates = vec![
        rate(table, "lambda_gap", |r| r.lambda_gap, 2.0 * lt),
        rate(table, "q_gap", |r| r.q_gap, 2.0 * lt),
        rate(table, "sin_angle", |r| r.sin_angle, lt),
        rate(table, "resid", |r| r.resid, lt),
    ];
    let bound_rates = vec![
        rate(table, "lambda_gap_bound", |r| r.lambda_gap_bound, 2.0 * lt),
        rate(table, "q_gap_bound", |r| r.q_gap_bound, 2.0 * lt),
        rate(table, "s_gap_bound", |r| r.s_gap_bound, lt),
        rate(table, "resid_bound", |r| r.resid_bound, lt),
    ];

    // c_k grows like k, so the local slope of the sine bound is
    // ln t + O(1/k); at k ≈ 200/|ln t| the correction is under 0.5%.
    let sep = diag
        .iter()
        .rev()
        .map(|d| d.sep)
        .find(|s| s.is_finite() && *s > 0.0)
        .unwrap_or(f64::NAN);
    let sine_bound_k = (200.0 / lt.abs()).ceil() as usize;
    let slope = match (
        sin_angle_bound(sine_bound_k, sd, re.norm_m, sep),
        sin_angle_bound(sine_bound_k + 1, sd, re.norm_m, sep),
    ) {
        (Ok(a), Ok(b)) if a > 0.0 && b > 0.0 => Some((b / a).ln()),
        _ => None,
    };
    let sine_bound_asymptotic = RateCheck {
        quantity: "sin_angle_bound",
        fit: slope.map(|slope| SlopeFit {
            slope,
            intercept: f64::NAN,
            first_k: sine_bound_k,
            last_k: sine_bound_k + 1,
            points: 2,
        }),
        predicted: lt,
    };
    RunAssessment {
        residual_identity,
        objective_identity,
        eigpair_residual,
        lambda_decrease,
        lambda_overshoot,
        q_increase,
        dominance,
        rates,
        bound_rates,
        sine_bound_asymptotic,
        sine_bound_k,
        k_lambda_gap_1e10: first_below(table, |r| r.lambda_gap, 1e-10),
        k_resid_1e10: first_below(table, |r| r.resid, 1e-10),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_geometric_series() {
        let ks: Vec<usize> = (3..20).collect();
        let ys: Vec<f64> = ks.iter().map(|&k| 5.0 * 0.6f64.powi(k as i32)).collect();
        let fit = fit_slope(&ks, &ys).unwrap();
        assert!((fit.slope - 0.6f64.ln()).abs() < 1e-12);
        assert!((fit.intercept - 5f64.ln()).abs() < 1e-10);
        assert!(fit_slope(&[1], &[1.0]).is_none());
    }

    #[test]
    fn regime_bounds() {
        let v = [1.0, 0.5, 1e-3, 1e-5, 1e-7, 1e-9, 1e-13, 1e-15];
        assert_eq!(linear_regime(&v, 1e-2, 1e-12), Some((2, 6)));
        assert_eq!(linear_regime(&v, 1e-8, 1e-12), None);
    }

    #[test]
    fn dominance_stops_at_floor() {
        let table = |m: [f64; 5], b: [f64; 5]| ExperimentTable {
            rows: (0..5)
                .map(|k| {
                    let mut v = [f64::NAN; 13];
                    v[0] = m[k];
                    v[1] = b[k];
                    ExperimentRow::from_values(k, v)
                })
                .collect(),
        };
        let t = table(
            [1.0, 1e-3, 1e-6, 1e-15, 1e-10],
            [2.0, 1e-3, 1e-7, 1e-20, 1e-20],
        );
        let rep = dominance(&t, |r| r.lambda_gap, |r| r.lambda_gap_bound, 0, 1e-14);
        assert_eq!(rep.checked, 3);
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].0, 2);
        let rep = dominance(&t, |r| r.lambda_gap, |r| r.lambda_gap_bound, 0, 1e-5);
        assert!(rep.holds());

        // A plateau at 3e-13 stops the check once the bound drops under it.
        let t = table(
            [1.0, 1e-6, 3e-13, 3e-13, 3e-13],
            [2.0, 1e-5, 1e-13, 1e-16, 1e-18],
        );
        let rep = dominance(&t, |r| r.lambda_gap, |r| r.lambda_gap_bound, 0, 1e-14);
        assert_eq!(rep.floor, 3e-13);
        assert_eq!(rep.checked, 2);
        assert!(rep.holds());
    }
}
