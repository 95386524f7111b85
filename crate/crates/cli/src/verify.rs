use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use trslab::bounds::{generating_closed_form, generating_partial_sum};
use trslab::eig_equiv::{full_space_eigenpair, AugmentedOperator};
use trslab::experiments::{
    assess_run, run_experiment, ExperimentRun, ProblemSpec, RunAssessment, RunOptions, DEFAULT_SEED,
};
use trslab::gltr::{gltr_solve, GltrOptions};
use trslab::linalg::{
    gaussian_vector, norm2, random_unit_vector, seeded_rng, DenseMatrix, DenseOperator,
};
use trslab::trs::{solve_trs_dense, CaseTag};

use crate::{Scale, VerifyArgs};

const RESID_IDENTITY_TOL: f64 = 1e-9;
const OBJECTIVE_IDENTITY_TOL: f64 = 1e-10;
const EIGPAIR_TOL: f64 = 1e-10;
const MONOTONE_SLACK: f64 = 1e-13;
const RATE_SLACK: f64 = 0.15;
const BOUND_RATE_TOL: f64 = 0.02;
const ORACLE_TOL: f64 = 1e-8;
const GENERATING_TOL: f64 = 1e-8;

const FAMILIES: [&str; 5] = ["1a", "1b", "2", "3", "4"];

/// One line of the report. `value ≤ limit` passes; the margin is
/// `limit / value`.
struct Check {
    name: String,
    value: f64,
    limit: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
        }
    }

    fn passed(&self) -> bool {
        self.value <= self.limit
    }

    fn line(&self) -> String {
        let margin = if self.value > 0.0 {
            self.limit / self.value
        } else {
            f64::INFINITY
        };
        format!(
            "{}  {:<44} {:>11.3e} <= {:<9.2e} margin {:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.limit,
            margin
        )
    }
}

fn sizes(scale: Scale) -> (usize, usize) {
    match scale {
        Scale::Quick => (2_000, 400),
        Scale::Full => (
            trslab::experiments::DEFAULT_N,
            trslab::experiments::DEFAULT_N_DENSE,
        ),
    }
}

fn run_checks(prefix: &str, a: &RunAssessment, run: &ExperimentRun) -> Vec<Check> {
    let p = |s: &str| format!("{prefix}/{s}");
    let mut out = vec![
        Check::new(
            p("residual identity"),
            a.residual_identity,
            RESID_IDENTITY_TOL,
        ),
        Check::new(
            p("objective identity"),
            a.objective_identity,
            OBJECTIVE_IDENTITY_TOL,
        ),
        Check::new(p("augmented eigenpair"), a.eigpair_residual, EIGPAIR_TOL),
        Check::new(
            p("lambda_k nondecreasing"),
            a.lambda_decrease,
            MONOTONE_SLACK * (1.0 + run.reference.lambda_opt),
        ),
        Check::new(
            p("q_k nonincreasing"),
            a.q_increase,
            MONOTONE_SLACK * (1.0 + run.reference.q_opt.abs()),
        ),
        Check::new(
            p("lambda_k <= lambda_opt"),
            a.lambda_overshoot.max(0.0),
            1e-10 * (1.0 + run.reference.lambda_opt),
        ),
        Check::new(
            p("reference stationarity"),
            run.reference.kkt.stationarity / (1.0 + run.reference.spectrum.beta0),
            1e-12,
        ),
    ];
    for d in &a.dominance {
        // Report 1/min_ratio so that "bound ≥ measured" reads as value ≤ 1.
        let inv = if d.report.checked == 0 {
            0.0
        } else {
            1.0 / d.report.min_ratio
        };
        out.push(Check::new(
            p(&format!("{} bound dominates", d.quantity)),
            inv,
            1.0,
        ));
    }
    for r in &a.rates {
        out.push(Check::new(
            p(&format!("{} slope / predicted", r.quantity)),
            (r.ratio() - 1.0).abs(),
            RATE_SLACK,
        ));
    }
    for r in a
        .bound_rates
        .iter()
        .chain(std::iter::once(&a.sine_bound_asymptotic))
    {
        out.push(Check::new(
            p(&format!("{} slope / predicted", r.quantity)),
            (r.ratio() - 1.0).abs(),
            BOUND_RATE_TOL,
        ));
    }
    out
}

/// Corrupt a finished run and make sure the matching check notices.
fn mutation_checks(run: &ExperimentRun) -> Vec<Check> {
    let mut out = Vec::new();
    let mid = run.table.rows.len() / 2;
    let scale = run.reference.alpha1.abs().max(run.reference.alpha_n.abs())
        * run.reference.spectrum.delta
        + run.reference.spectrum.beta0;
    let caught = |name: &str, hit: bool| {
        Check::new(format!("mutation/{name}"), if hit { 0.0 } else { 1.0 }, 0.0)
    };

    let mut m = run.clone();
    m.table.rows[mid].resid_formula += 1e-6 * scale;
    out.push(caught(
        "perturbed residual formula",
        assess_run(&m).residual_identity > RESID_IDENTITY_TOL,
    ));

    let mut m = run.clone();
    m.table.rows.iter_mut().for_each(|r| r.q_gap_bound *= 1e-3);
    let a = assess_run(&m);
    let hit = a
        .dominance
        .iter()
        .any(|d| d.quantity == "q_gap" && !d.report.holds());
    out.push(caught("shrunken q bound", hit));

    let mut m = run.clone();
    let jump = (1..m.diagnostics.len()).max_by(|&i, &j| {
        let d = |k: usize| m.diagnostics[k].lambda - m.diagnostics[k - 1].lambda;
        d(i).total_cmp(&d(j))
    });
    if let Some(i) = jump {
        let (x, y) = (m.diagnostics[i - 1].lambda, m.diagnostics[i].lambda);
        m.diagnostics[i - 1].lambda = y;
        m.diagnostics[i].lambda = x;
    }
    let a = assess_run(&m);
    out.push(caught(
        "swapped multipliers",
        a.lambda_decrease > MONOTONE_SLACK * (1.0 + run.reference.lambda_opt),
    ));

    let mut m = run.clone();
    m.table
        .rows
        .iter_mut()
        .for_each(|r| r.q_gap = r.q_gap.sqrt());
    let a = assess_run(&m);
    let q = a.rates.iter().find(|r| r.quantity == "q_gap").unwrap();
    out.push(caught(
        "halved q_gap rate",
        (q.ratio() - 1.0).abs() > RATE_SLACK || q.ratio().is_nan(),
    ));
    out
}

/// GLTR against the dense eigendecomposition solver, and the augmented
/// eigenpair built from the GLTR solution, on random dense problems.
fn random_trs_checks(seed: u64, cases: usize) -> Vec<Check> {
    let results: Vec<(f64, f64, f64)> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            let n = rng.random_range(5..60);
            let delta = rng.random_range(0.2..3.0);
            let shift = rng.random_range(-1.0..1.0);
            let g = gaussian_vector(&mut rng, n * n);
            let s = 2.0 * (n as f64).sqrt();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|r| {
                    (0..n)
                        .map(|c| {
                            (g[r * n + c] + g[c * n + r]) / s + if r == c { shift } else { 0.0 }
                        })
                        .collect()
                })
                .collect();
            let m = DenseMatrix::from_rows(&rows).unwrap();
            let dense = m.to_symmetric(1e-14).unwrap();
            let grad = random_unit_vector(&mut rng, n);
            let op = DenseOperator::new(m.clone()).unwrap();
            let opts = GltrOptions {
                resid_tol: 1e-13,
                k_max: n,
                ..GltrOptions::default()
            };
            let (Ok(r), Ok(o)) = (
                gltr_solve(&op, &grad, delta, &opts),
                solve_trs_dense(&dense, &grad, delta, 1e-14),
            ) else {
                return (f64::INFINITY, f64::INFINITY, f64::INFINITY);
            };
            let dl = (r.lambda - o.lambda).abs() / (1.0 + o.lambda);
            let ds = norm2(&r.s.iter().zip(&o.h).map(|(a, b)| a - b).collect::<Vec<_>>()) / delta;
            let pair = if r.case == CaseTag::Boundary {
                let shifted = m.shifted(-r.lambda);
                match shifted.lu() {
                    Ok(lu) => {
                        let y2 = lu.solve(&r.s);
                        let z = full_space_eigenpair(r.lambda, &r.s, y2).stacked();
                        let big = AugmentedOperator::new(&op, &grad, delta).assemble();
                        let mut res = big.matvec(&z);
                        res.iter_mut()
                            .zip(&z)
                            .for_each(|(x, zi)| *x -= r.lambda * zi);
                        norm2(&res) / big.max_column_norm()
                    }
                    Err(_) => 0.0,
                }
            } else {
                0.0
            };
            (dl, ds, pair)
        })
        .collect();
    let max = |f: fn(&(f64, f64, f64)) -> f64| results.iter().map(f).fold(0.0, f64::max);
    vec![
        Check::new(
            format!("random/gltr vs dense lambda ({cases} cases)"),
            max(|r| r.0),
            ORACLE_TOL,
        ),
        Check::new(
            format!("random/gltr vs dense s ({cases} cases)"),
            max(|r| r.1),
            ORACLE_TOL,
        ),
        Check::new(
            format!("random/augmented eigenpair ({cases} cases)"),
            max(|r| r.2),
            EIGPAIR_TOL,
        ),
    ]
}

fn generating_check(seed: u64, cases: usize) -> Check {
    let mut rng = seeded_rng(seed ^ 0x9e37_79b9);
    let worst = (0..cases)
        .map(|_| {
            let x = rng.random_range(-1.0..=1.0);
            let t = rng.random_range(0.05..=0.9);
            (generating_partial_sum(400, t, x) - generating_closed_form(t, x)).abs()
        })
        .fold(0.0, f64::max);
    Check::new(
        format!("random/generating identity ({cases} cases)"),
        worst,
        GENERATING_TOL,
    )
}

fn threads() -> Option<usize> {
    std::env::var("TRSLAB_THREADS")
        .ok()?
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

pub fn run(args: &VerifyArgs) -> ExitCode {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads() {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let start = Instant::now();
    let (n_diag, n_dense) = sizes(args.scale);
    let cases = match args.scale {
        Scale::Quick => 100,
        Scale::Full => 500,
    };
    let (runs, random) = pool.install(|| {
        rayon::join(
            || {
                FAMILIES
                    .par_iter()
                    .map(|&name| {
                        let n = if name == "4" { n_dense } else { n_diag };
                        let spec = ProblemSpec::named(name, Some(n), DEFAULT_SEED).unwrap();
                        (name, run_experiment(&spec, &RunOptions::default()))
                    })
                    .collect::<Vec<_>>()
            },
            || random_trs_checks(args.seed, cases),
        )
    });

    let mut checks = Vec::new();
    let mut first_ok = None;
    for (name, run) in &runs {
        match run {
            Ok(run) => {
                checks.extend(run_checks(
                    &format!("example {name}"),
                    &assess_run(run),
                    run,
                ));
                first_ok.get_or_insert(run);
            }
            Err(e) => {
                eprintln!("example {name}: {e}");
                checks.push(Check::new(
                    format!("example {name}/run"),
                    f64::INFINITY,
                    0.0,
                ));
            }
        }
    }
    checks.extend(random);
    checks.push(generating_check(args.seed, 10 * cases));
    if let Some(run) = first_ok {
        checks.extend(mutation_checks(run));
    }

    let failed = checks.iter().filter(|c| !c.passed()).count();
    for c in &checks {
        println!("{}", c.line());
    }
    println!(
        "{} checks, {} failed ({:.1} s)",
        checks.len(),
        failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
