use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::checks::first_below;
use super::run::{ExperimentRow, ExperimentRun, ExperimentTable};
use super::{ExperimentError, ProblemSpec};
use crate::gltr::TerminationReason;

pub const CSV_HEADER: &str = "k,lambda_gap,lambda_gap_bound,sin_angle,sin_angle_bound,q_gap,q_gap_bound,resid,resid_formula,resid_bound,s_gap,s_gap_bound,cg_gap,cg_gap_bound";

/// Lower clip for plotted values; the CSV keeps the raw numbers.
pub const PLOT_FLOOR: f64 = 1e-16;

/// 17 significant digits, so `parse(format(x)) == x`.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(table: &ExperimentTable, mut w: W) -> Result<(), ExperimentError> {
    if table.rows.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let mut out = String::with_capacity(table.rows.len() * 320);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&r.k.to_string());
        for v in r.values() {
            out.push(',');
            out.push_str(&fmt(v));
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn emit_csv(table: &ExperimentTable, path: &Path) -> Result<(), ExperimentError> {
    if table.rows.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<ExperimentTable, ExperimentError> {
    let mut lines = text.split('\n');
    let header = lines.next().unwrap_or("");
    if header != CSV_HEADER {
        return Err(ExperimentError::Csv {
            line: 1,
            message: "unexpected header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let ln = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 14 {
            return Err(ExperimentError::Csv {
                line: ln,
                message: format!("expected 14 fields, found {}", fields.len()),
            });
        }
        let bad = |what: &str| ExperimentError::Csv {
            line: ln,
            message: format!("cannot parse {what}"),
        };
        let k: usize = fields[0].parse().map_err(|_| bad(fields[0]))?;
        let mut v = [0.0; 13];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| bad(f))?;
        }
        rows.push(ExperimentRow::from_values(k, v));
    }
    Ok(ExperimentTable { rows })
}

/// Gnuplot script drawing the four panels (a) multiplier gap, (b) solution
/// angle, (c) objective gap, (d) residual, each against its bound.
pub fn emit_plot_script(
    table: &ExperimentTable,
    csv_name: &str,
    title: &str,
    path: &Path,
) -> Result<(), ExperimentError> {
    if table.rows.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    let stem = csv_name.strip_suffix(".csv").unwrap_or(csv_name);
    let panels = [
        ("(a) lambda_opt - lambda_k", 2, 3),
        ("(b) sin angle(s_k, s_opt)", 4, 5),
        ("(c) q(s_k) - q(s_opt)", 6, 7),
        ("(d) ||(A + lambda_k I) s_k + g||", 8, 10),
    ];
    let mut s = String::new();
    s.push_str(&format!("# {title}\n"));
    s.push_str("set terminal svg size 1200,860 dynamic\n");
    s.push_str(&format!("set output '{stem}.svg'\n"));
    s.push_str("set datafile separator ','\n");
    s.push_str(&format!(
        "clip(x) = (x < {PLOT_FLOOR:e}) ? {PLOT_FLOOR:e} : x\n"
    ));
    s.push_str("set logscale y\n");
    s.push_str("set format y '10^{%L}'\n");
    s.push_str(&format!("set yrange [{PLOT_FLOOR:e}:*]\n"));
    s.push_str("set xlabel 'k'\n");
    s.push_str("set key top right\n");
    s.push_str(&format!("set multiplot layout 2,2 title '{title}'\n"));
    for (name, measured, bound) in panels {
        s.push_str(&format!("set title '{name}'\n"));
        s.push_str(&format!(
            "plot '{csv_name}' skip 1 using 1:(clip(${measured})) with linespoints pt 7 ps 0.4 title 'measured', \\\n     '{csv_name}' skip 1 using 1:(clip(${bound})) with lines dt 2 lw 2 title 'bound'\n"
        ));
    }
    s.push_str("unset multiplot\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// The parameter row of an example: `α₁, α_n, κ, t, λ_opt, q(s_opt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterRow {
    pub alpha1: f64,
    pub alpha_n: f64,
    pub kappa: f64,
    pub t: f64,
    pub lambda_opt: f64,
    pub q_opt: f64,
}

impl ParameterRow {
    /// Rounded to four decimals, as printed in the summary tables.
    pub fn rounded(&self) -> RoundedParameters {
        let r = |x: f64| format!("{x:.4}");
        RoundedParameters {
            alpha1: r(self.alpha1),
            alpha_n: r(self.alpha_n),
            kappa: r(self.kappa),
            t: r(self.t),
            lambda_opt: r(self.lambda_opt),
            q_opt: r(self.q_opt),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundedParameters {
    pub alpha1: String,
    pub alpha_n: String,
    pub kappa: String,
    pub t: String,
    pub lambda_opt: String,
    pub q_opt: String,
}

/// First iteration at which a measured column drops below a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Milestone {
    pub quantity: String,
    pub threshold: f64,
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub spec: ProblemSpec,
    pub parameters: ParameterRow,
    pub parameters_rounded: RoundedParameters,
    pub reference_method: String,
    pub beta0: f64,
    pub norm_m: f64,
    pub y1_norm: f64,
    pub iterations: usize,
    pub termination: TerminationReason,
    /// First `k` with `λ_opt − λ_k ≤ α_n + λ_opt`.
    pub asymptotic_start: Option<usize>,
    pub milestones: Vec<Milestone>,
}

impl ExperimentSummary {
    pub fn from_run(name: &str, run: &ExperimentRun) -> Self {
        let r = &run.reference;
        let parameters = ParameterRow {
            alpha1: r.alpha1,
            alpha_n: r.alpha_n,
            kappa: r.spectrum.kappa,
            t: r.spectrum.t,
            lambda_opt: r.lambda_opt,
            q_opt: r.q_opt,
        };
        let table = &run.table;
        let mut milestones = Vec::new();
        type Column = (&'static str, fn(&ExperimentRow) -> f64);
        let cols: [Column; 4] = [
            ("lambda_gap", |r| r.lambda_gap),
            ("sin_angle", |r| r.sin_angle),
            ("q_gap", |r| r.q_gap),
            ("resid", |r| r.resid),
        ];
        for (q, f) in cols {
            for threshold in [1e-10, 1e-12, 1e-13] {
                milestones.push(Milestone {
                    quantity: q.to_string(),
                    threshold,
                    k: first_below(table, f, threshold),
                });
            }
        }
        ExperimentSummary {
            name: name.to_string(),
            spec: run.spec.clone(),
            parameters,
            parameters_rounded: parameters.rounded(),
            reference_method: r.method.to_string(),
            beta0: r.spectrum.beta0,
            norm_m: r.norm_m,
            y1_norm: r.y1_norm,
            iterations: table.rows.len(),
            termination: run.termination,
            asymptotic_start: run.asymptotic_start(),
            milestones,
        }
    }
}

pub fn emit_summary(
    name: &str,
    run: &ExperimentRun,
    path: &Path,
) -> Result<ExperimentSummary, ExperimentError> {
    let summary = ExperimentSummary::from_run(name, run);
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentTable {
        let rows = (0..3)
            .map(|k| {
                let mut v = [0.0; 13];
                for (i, x) in v.iter_mut().enumerate() {
                    *x = (0.1 + i as f64).powi(k as i32 + 1) * std::f64::consts::PI * 1e-7;
                }
                v[3] = f64::NAN;
                v[4] = -1.5e-17;
                ExperimentRow::from_values(k, v)
            })
            .collect();
        ExperimentTable { rows }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert!(!text.contains('\r'));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.rows.len(), 3);
        for (a, b) in t.rows.iter().zip(&back.rows) {
            assert_eq!(a.k, b.k);
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
            }
        }
    }

    #[test]
    fn empty_table_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let e = emit_csv(&ExperimentTable::default(), &dir.path().join("x.csv"));
        assert!(matches!(e, Err(ExperimentError::EmptyTable)));
        let e = emit_plot_script(
            &ExperimentTable::default(),
            "x.csv",
            "x",
            &dir.path().join("x.plt"),
        );
        assert!(matches!(e, Err(ExperimentError::EmptyTable)));
    }

    #[test]
    fn plot_script_clips_and_references_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ex.plt");
        emit_plot_script(&sample(), "ex.csv", "Example", &p).unwrap();
        let s = std::fs::read_to_string(p).unwrap();
        assert!(s.contains("clip(x) = (x < 1e-16) ? 1e-16 : x"));
        assert!(s.contains("'ex.csv'"));
        assert!(s.contains("layout 2,2"));
        assert_eq!(s.matches("set title").count(), 4);
    }

    #[test]
    fn bad_csv_reports_line() {
        let text = format!("{CSV_HEADER}\n0,1\n");
        match parse_csv(&text) {
            Err(ExperimentError::Csv { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_csv("k,x\n").is_err());
    }

    #[test]
    fn rounding_to_four_decimals() {
        let p = ParameterRow {
            alpha1: 4.99999,
            alpha_n: -4.99999,
            kappa: 18.14813,
            t: 0.61979,
            lambda_opt: 2.23334,
            q_opt: -1.47701,
        };
        let r = p.rounded();
        assert_eq!(r.alpha1, "5.0000");
        assert_eq!(r.alpha_n, "-5.0000");
        assert_eq!(r.t, "0.6198");
    }
}
