use std::io::Write;
use std::process::ExitCode;

use serde_json::json;
use trslab::gltr::{gltr_solve, GltrError, GltrOptions, TerminationReason};
use trslab::linalg::{norm2, random_unit_vector, seeded_rng, SymmetricLinearOperator};
use trslab::mmio::{read_matrix_market_file, read_vector_file};
use trslab::trs::{check_kkt, TrsError};

use crate::{SolveArgs, EXIT_NEAR_HARD, EXIT_NO_CONVERGENCE, EXIT_PARSE};

fn print_json(v: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json"));
}

pub fn run(args: &SolveArgs) -> ExitCode {
    let a = match read_matrix_market_file(&args.matrix) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}: {e}", args.matrix.display());
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let n = a.dim();
    let g = match (&args.gradient, args.seed_gradient) {
        (Some(p), _) => match read_vector_file(p) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(EXIT_PARSE);
            }
        },
        (None, Some(seed)) => random_unit_vector(&mut seeded_rng(seed), n),
        (None, None) => unreachable!("clap requires one gradient source"),
    };
    if g.len() != n {
        eprintln!(
            "error: gradient has length {}, matrix has order {n}",
            g.len()
        );
        return ExitCode::from(EXIT_PARSE);
    }
    if args.delta.is_nan() || args.delta <= 0.0 || !args.delta.is_finite() {
        eprintln!("error: --delta must be positive, got {}", args.delta);
        return ExitCode::from(EXIT_PARSE);
    }

    let opts = GltrOptions {
        resid_tol: args.tol,
        k_max: args.k_max,
        ..GltrOptions::default()
    };
    let r = match gltr_solve(&a, &g, args.delta, &opts) {
        Ok(r) => r,
        Err(GltrError::Trs {
            k,
            source:
                TrsError::NearHardCase {
                    lambda,
                    h_norm,
                    gap,
                },
        }) => {
            print_json(&json!({
                "error": "near_hard_case",
                "iteration": k,
                "lambda": lambda,
                "h_norm": h_norm,
                "bracket_gap": gap,
            }));
            eprintln!("error: near hard case at iteration {k}");
            return ExitCode::from(EXIT_NEAR_HARD);
        }
        Err(GltrError::Trs {
            k,
            source:
                TrsError::NoConvergence {
                    iterations,
                    residual,
                },
        }) => {
            print_json(&json!({
                "error": "no_convergence",
                "iteration": k,
                "secular_iterations": iterations,
                "boundary_residual": residual,
            }));
            eprintln!("error: secular iteration failed at iteration {k}");
            return ExitCode::from(EXIT_NO_CONVERGENCE);
        }
        Err(GltrError::ZeroGradient) => {
            // s = 0 is optimal with λ = 0.
            print_json(&json!({
                "lambda": 0.0, "s_norm": 0.0, "q": 0.0, "case": "interior",
                "iterations": 0, "termination": "zero_gradient",
            }));
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };

    let kkt = check_kkt(&a, &g, args.delta, r.lambda, &r.s, args.kkt_tol);
    print_json(&json!({
        "lambda": r.lambda,
        "s_norm": norm2(&r.s),
        "q": r.q,
        "case": r.case,
        "iterations": r.iterations(),
        "termination": r.termination,
        "resid": r.history.last().map(|h| h.resid_formula),
        "kkt": kkt,
    }));
    if let Some(path) = &args.solution_out {
        let text: String = r.s.iter().map(|x| format!("{x:.17e}\n")).collect();
        if let Err(e) = std::fs::write(path, text) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if r.termination == TerminationReason::KMax {
        eprintln!(
            "error: residual tolerance {} not reached within {} iterations",
            args.tol, args.k_max
        );
        return ExitCode::from(EXIT_NO_CONVERGENCE);
    }
    ExitCode::SUCCESS
}
