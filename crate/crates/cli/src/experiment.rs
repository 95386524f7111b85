use std::path::Path;
use std::process::ExitCode;

use trslab::experiments::{
    emit_csv, emit_plot_script, emit_summary, run_experiment, ExperimentError, ProblemSpec,
    RunOptions, DEFAULT_SEED,
};
use trslab::gltr::GltrError;
use trslab::trs::TrsError;

use crate::{ExperimentArgs, EXIT_NEAR_HARD, EXIT_NO_CONVERGENCE, EXIT_PARSE};

fn resolve(args: &ExperimentArgs) -> Result<(String, ProblemSpec), String> {
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    if let Some(spec) = ProblemSpec::named(&args.name, args.n, seed) {
        let mut spec = spec;
        spec.params.similarity = args.similarity;
        spec.validate().map_err(|e| e.to_string())?;
        return Ok((args.name.clone(), spec));
    }
    let path = Path::new(&args.name);
    let text = std::fs::read_to_string(path).map_err(|e| {
        format!(
            "{}: not an example name (1a, 1b, 2, 3, 4) and not readable: {e}",
            args.name
        )
    })?;
    let mut spec = ProblemSpec::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if args.similarity.is_some() {
        spec.params.similarity = args.similarity;
    }
    spec.validate().map_err(|e| e.to_string())?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into());
    Ok((name, spec))
}

fn exit_code(e: &ExperimentError) -> u8 {
    match e {
        ExperimentError::Trs(TrsError::NearHardCase { .. })
        | ExperimentError::Gltr(GltrError::Trs {
            source: TrsError::NearHardCase { .. },
            ..
        }) => EXIT_NEAR_HARD,
        ExperimentError::Trs(TrsError::NoConvergence { .. })
        | ExperimentError::Gltr(GltrError::Trs {
            source: TrsError::NoConvergence { .. },
            ..
        }) => EXIT_NO_CONVERGENCE,
        ExperimentError::InvalidSpec(_) | ExperimentError::Input(_) | ExperimentError::Json(_) => {
            EXIT_PARSE
        }
        _ => 1,
    }
}

pub fn run(args: &ExperimentArgs) -> ExitCode {
    let (name, spec) = match resolve(args) {
        Ok(x) => x,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let opts = RunOptions {
        k_max: args.kmax,
        gamma_stride: args.checkpoints,
        ..RunOptions::default()
    };
    let result = run_experiment(&spec, &opts).and_then(|run| {
        std::fs::create_dir_all(&args.out_dir)?;
        let csv_name = format!("{name}.csv");
        emit_csv(&run.table, &args.out_dir.join(&csv_name))?;
        emit_plot_script(
            &run.table,
            &csv_name,
            &format!("Example {name} (n = {}, seed = {})", spec.n, spec.seed),
            &args.out_dir.join(format!("{name}.plt")),
        )?;
        let summary = emit_summary(
            &name,
            &run,
            &args.out_dir.join(format!("{name}.summary.json")),
        )?;
        Ok(summary)
    });
    match result {
        Ok(s) => {
            let p = &s.parameters_rounded;
            println!(
                "example {name}: n = {}, seed = {}, iterations = {}",
                spec.n, spec.seed, s.iterations
            );
            println!("  alpha_1    alpha_n    kappa      t          lambda_opt q(s_opt)");
            println!(
                "  {:<10} {:<10} {:<10} {:<10} {:<10} {}",
                p.alpha1, p.alpha_n, p.kappa, p.t, p.lambda_opt, p.q_opt
            );
            println!(
                "  wrote {name}.csv, {name}.plt, {name}.summary.json to {}",
                args.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
