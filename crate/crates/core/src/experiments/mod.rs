//! Test-problem families, reference solutions, per-iteration error and bound
//! tables, and their CSV / gnuplot / JSON emission.

mod checks;
mod emit;
mod generate;
mod reference;
mod run;

pub use checks::{
    assess_run, dominance, first_below, fit_slope, linear_regime, DominanceReport, NamedDominance,
    RateCheck, RunAssessment, SlopeFit, FLOATING_FLOOR, REGIME_HI, REGIME_LO,
};
pub use emit::{
    emit_csv, emit_plot_script, emit_summary, parse_csv, write_csv, ExperimentSummary, Milestone,
    ParameterRow, RoundedParameters, CSV_HEADER, PLOT_FLOOR,
};
pub use generate::{generate, Problem, ProblemOperator};
pub use reference::{reference_solution, ReferenceSolution};
pub use reference::{REFERENCE_KKT_TOL, REFERENCE_RESID_TOL};
pub use run::{
    run_experiment, run_problem, ExperimentRow, ExperimentRun, ExperimentTable, RowDiagnostics,
    RunOptions, EXPERIMENT_K_MAX, EXPERIMENT_RESID_TOL,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoundsError;
use crate::eig_equiv::EigEquivError;
use crate::gltr::GltrError;
use crate::linalg::LinalgError;
use crate::mmio::MatrixMarketError;
use crate::trs::TrsError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),
    #[error("reading problem input: {0}")]
    Input(#[from] MatrixMarketError),
    #[error(transparent)]
    Trs(#[from] TrsError),
    #[error(transparent)]
    Gltr(#[from] GltrError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    EigEquiv(#[from] EigEquivError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("reference solution failed its optimality check: {0}")]
    Reference(String),
    #[error("cannot emit an empty table")]
    EmptyTable,
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Eigenvalues evenly spread over `[a, b]`, mirrored about the middle.
    Evenly1a,
    /// `−e^{2i/n}` for the lower half, `e^{(2i−n)/n}` for the upper half.
    Exp1b,
    /// Chebyshev zero nodes translated to `[a, b]`.
    ChebNodes2,
    /// Strakoš spectrum with endpoints `α₁ > α_n` and decay `ρ`; see
    /// [`ClusterEnd`] for which end accumulates eigenvalues.
    Strakos3,
    /// Dense `(G+Gᵀ)/‖G+Gᵀ‖₂` with Gaussian `G`.
    RandomSym4,
    /// Matrix Market file.
    FromFile,
}

/// End of a Strakoš spectrum where the eigenvalues accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterEnd {
    /// `α_i = α_n + ((n−i)/(n−1))(α₁−α_n)ρ^{i−1}`: the usual Strakoš matrix,
    /// dense near `α_n` with the large eigenvalues well separated.
    #[default]
    AlphaN,
    /// `α_i = α₁ + ((i−1)/(n−1))(α_n−α₁)ρ^{n−i}`: dense near `α₁` with the
    /// small eigenvalues well separated.
    Alpha1,
}

/// Family-specific parameters. Missing entries take the defaults of the
/// named examples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_at: Option<ClusterEnd>,
    /// Number of seeded Householder reflectors applied as an orthogonal
    /// similarity to a diagonal family (0 or absent: keep it diagonal).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<usize>,
    /// Matrix Market file for `FromFile`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Gradient file for `FromFile`; a seeded Gaussian unit vector otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub family: Family,
    pub n: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub seed: u64,
    #[serde(default)]
    pub params: ProblemParams,
}

fn default_delta() -> f64 {
    1.0
}

pub const DEFAULT_N: usize = 10_000;
/// Dense storage at the diagonal families' size would need ~800 MB.
pub const DEFAULT_N_DENSE: usize = 2_000;
pub const DEFAULT_SEED: u64 = 20_240_601;
/// Largest order for which a similarity transform is allowed.
pub const SIMILARITY_CAP: usize = 2_000;

impl ProblemSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        ProblemSpec {
            family,
            n,
            delta: 1.0,
            seed,
            params: ProblemParams::default(),
        }
    }

    /// The built-in examples by short name: `1a`, `1b`, `2`, `3`, `4`.
    pub fn named(name: &str, n: Option<usize>, seed: u64) -> Option<Self> {
        let family = match name {
            "1a" => Family::Evenly1a,
            "1b" => Family::Exp1b,
            "2" => Family::ChebNodes2,
            "3" => Family::Strakos3,
            "4" => Family::RandomSym4,
            _ => return None,
        };
        let default_n = if family == Family::RandomSym4 {
            DEFAULT_N_DENSE
        } else {
            DEFAULT_N
        };
        Some(ProblemSpec::new(family, n.unwrap_or(default_n), seed))
    }

    pub fn from_json(s: &str) -> Result<Self, ExperimentError> {
        let spec: ProblemSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidSpec(m));
        if self.family != Family::FromFile && self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        let p = &self.params;
        if let Some(rho) = p.rho {
            if !(rho > 0.0 && rho <= 1.0) {
                return bad(format!("rho must lie in (0, 1], got {rho}"));
            }
        }
        if let Some([a, b]) = p.interval {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return bad(format!("interval [{a}, {b}] must satisfy a < b"));
            }
        }
        if let (Some(a1), Some(an)) = (p.alpha1, p.alpha_n) {
            if !(a1 > an) {
                return bad(format!("alpha1 = {a1} must exceed alpha_n = {an}"));
            }
        }
        if let Some(r) = p.similarity {
            if r > 0 && self.n > SIMILARITY_CAP {
                return bad(format!(
                    "similarity transforms are limited to n <= {SIMILARITY_CAP}"
                ));
            }
            if r > 0 && matches!(self.family, Family::RandomSym4 | Family::FromFile) {
                return bad("similarity applies only to the diagonal families".into());
            }
        }
        let uses = |field: bool, name: &str, allowed: &[Family]| {
            if field && !allowed.contains(&self.family) {
                Err(ExperimentError::InvalidSpec(format!(
                    "parameter {name} does not apply to family {:?}",
                    self.family
                )))
            } else {
                Ok(())
            }
        };
        uses(
            p.interval.is_some(),
            "interval",
            &[Family::Evenly1a, Family::ChebNodes2],
        )?;
        uses(p.rho.is_some(), "rho", &[Family::Strakos3])?;
        uses(
            p.alpha1.is_some() || p.alpha_n.is_some() || p.cluster_at.is_some(),
            "alpha1/alpha_n/cluster_at",
            &[Family::Strakos3],
        )?;
        uses(
            p.path.is_some() || p.gradient.is_some(),
            "path/gradient",
            &[Family::FromFile],
        )?;
        if self.family == Family::FromFile && p.path.is_none() {
            return bad("FromFile needs params.path".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut s = ProblemSpec::new(Family::Strakos3, 50, 7);
        s.params.rho = Some(0.9);
        let back = ProblemSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn json_field_names() {
        let s = ProblemSpec::from_json(
            r#"{"family":"ChebNodes2","n":10,"delta":2.0,"seed":1,"params":{}}"#,
        )
        .unwrap();
        assert_eq!(s.family, Family::ChebNodes2);
        assert_eq!(s.delta, 2.0);
        assert!(
            ProblemSpec::from_json(r#"{"family":"ChebNodes2","n":10,"seed":1,"extra":0}"#).is_err()
        );
    }

    #[test]
    fn validation() {
        assert!(ProblemSpec::new(Family::Evenly1a, 1, 0).validate().is_err());
        let mut s = ProblemSpec::new(Family::Strakos3, 10, 0);
        s.params.rho = Some(1.5);
        assert!(s.validate().is_err());
        s.params.rho = Some(1.0);
        assert!(s.validate().is_ok());
        s.delta = 0.0;
        assert!(s.validate().is_err());
        let mut s = ProblemSpec::new(Family::Exp1b, 10, 0);
        s.params.rho = Some(0.5);
        assert!(s.validate().is_err());
        assert!(ProblemSpec::new(Family::FromFile, 0, 0).validate().is_err());
    }

    #[test]
    fn named_defaults() {
        assert_eq!(ProblemSpec::named("4", None, 1).unwrap().n, DEFAULT_N_DENSE);
        assert_eq!(ProblemSpec::named("1a", None, 1).unwrap().n, DEFAULT_N);
        assert!(ProblemSpec::named("5", None, 1).is_none());
    }
}
