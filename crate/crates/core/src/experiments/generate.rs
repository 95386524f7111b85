use std::f64::consts::PI;
use std::path::Path;

use super::{ClusterEnd, ExperimentError, Family, ProblemSpec};
use crate::lanczos::extremal_eigenvalues;
use crate::linalg::{
    gaussian_vector, random_unit_vector, seeded_rng, DenseMatrix, DenseOperator, DiagonalOperator,
    HouseholderReflector, HouseholderSimilarity, Storage, SymmetricLinearOperator,
};
use crate::mmio::{read_matrix_market_file, read_vector_file, SymmetricMatrix};

/// Separate stream for similarity reflectors, so that switching the
/// similarity on leaves the eigenbasis gradient unchanged.
const SIMILARITY_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
/// Seed for the Lanczos start vector of extremal-eigenvalue estimates.
pub(crate) const SPECTRUM_SEED: u64 = 0x5eed_0001;

pub enum ProblemOperator {
    Diagonal(DiagonalOperator),
    Similarity(HouseholderSimilarity),
    Dense(DenseOperator),
    File(SymmetricMatrix),
}

impl SymmetricLinearOperator for ProblemOperator {
    fn dim(&self) -> usize {
        match self {
            ProblemOperator::Diagonal(a) => a.dim(),
            ProblemOperator::Similarity(a) => a.dim(),
            ProblemOperator::Dense(a) => a.dim(),
            ProblemOperator::File(a) => a.dim(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            ProblemOperator::Diagonal(a) => a.apply(x, y),
            ProblemOperator::Similarity(a) => a.apply(x, y),
            ProblemOperator::Dense(a) => a.apply(x, y),
            ProblemOperator::File(a) => a.apply(x, y),
        }
    }

    fn storage(&self) -> Storage<'_> {
        match self {
            ProblemOperator::Diagonal(a) => a.storage(),
            ProblemOperator::Similarity(a) => a.storage(),
            ProblemOperator::Dense(a) => a.storage(),
            ProblemOperator::File(a) => a.storage(),
        }
    }
}

impl ProblemOperator {
    /// Eigenvalues when they are known exactly by construction.
    pub fn known_spectrum(&self) -> Option<&[f64]> {
        match self {
            ProblemOperator::Diagonal(a) => Some(a.diag()),
            ProblemOperator::Similarity(a) => Some(a.diag()),
            _ => None,
        }
    }
}

pub struct Problem {
    pub spec: ProblemSpec,
    pub a: ProblemOperator,
    pub g: Vec<f64>,
}

fn spectrum(spec: &ProblemSpec) -> Vec<f64> {
    let n = spec.n;
    let nf = n as f64;
    let p = &spec.params;
    match spec.family {
        Family::Evenly1a => {
            let [a, b] = p.interval.unwrap_or([-2.0, 2.0]);
            let w = b - a;
            (1..=n)
                .map(|i| {
                    if 2 * i <= n {
                        a + w * (i - 1) as f64 / nf
                    } else {
                        b - w * (n - i) as f64 / nf
                    }
                })
                .collect()
        }
        Family::Exp1b => (1..=n)
            .map(|i| {
                if 2 * i <= n {
                    -(2.0 * i as f64 / nf).exp()
                } else {
                    ((2.0 * i as f64 - nf) / nf).exp()
                }
            })
            .collect(),
        Family::ChebNodes2 => {
            let [a, b] = p.interval.unwrap_or([-5.0, 5.0]);
            let half = 0.5 * (b - a);
            let shift = (a + b) / (b - a);
            (1..=n)
                .map(|j| half * (((2 * j - 1) as f64 * PI / (2.0 * nf)).cos() + shift))
                .collect()
        }
        Family::Strakos3 => {
            let a1 = p.alpha1.unwrap_or(8.0);
            let an = p.alpha_n.unwrap_or(-2.0);
            let rho = p.rho.unwrap_or(0.99);
            let w = |m: usize| m as f64 / (nf - 1.0);
            match p.cluster_at.unwrap_or_default() {
                ClusterEnd::AlphaN => (1..=n)
                    .map(|i| an + w(n - i) * (a1 - an) * rho.powi((i - 1) as i32))
                    .collect(),
                ClusterEnd::Alpha1 => (1..=n)
                    .map(|i| a1 + w(i - 1) * (an - a1) * rho.powi((n - i) as i32))
                    .collect(),
            }
        }
        Family::RandomSym4 | Family::FromFile => unreachable!("not a diagonal family"),
    }
}

/// Seeded `(G+Gᵀ)/‖G+Gᵀ‖₂`, normalized by the extremal Ritz values.
fn random_symmetric(
    n: usize,
    rng: &mut crate::linalg::Rng64,
) -> Result<DenseOperator, ExperimentError> {
    let g = gaussian_vector(rng, n * n);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = g[i * n + j] + g[j * n + i];
        }
    }
    let raw = DenseOperator::new(DenseMatrix::from_row_major(n, n, data))?;
    let ext = extremal_eigenvalues(&raw, SPECTRUM_SEED, 1e-13, n.min(1000));
    let norm = ext.min.abs().max(ext.max.abs());
    let mut data = raw.matrix().as_slice().to_vec();
    for v in data.iter_mut() {
        *v /= norm;
    }
    // Symmetric entries are scaled identically, so symmetry is exact.
    Ok(DenseOperator::new(DenseMatrix::from_row_major(n, n, data))?)
}

pub fn generate(spec: &ProblemSpec) -> Result<Problem, ExperimentError> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let (a, g) = match spec.family {
        Family::RandomSym4 => {
            let a = random_symmetric(spec.n, &mut rng)?;
            let g = random_unit_vector(&mut rng, spec.n);
            (ProblemOperator::Dense(a), g)
        }
        Family::FromFile => {
            let path = spec.params.path.as_deref().expect("validated");
            let a = read_matrix_market_file(Path::new(path))?;
            let n = a.dim();
            if spec.n != 0 && spec.n != n {
                return Err(ExperimentError::InvalidSpec(format!(
                    "spec says n = {} but {path} has order {n}",
                    spec.n
                )));
            }
            let g = match spec.params.gradient.as_deref() {
                Some(gp) => read_vector_file(Path::new(gp))?,
                None => random_unit_vector(&mut rng, n),
            };
            if g.len() != n {
                return Err(ExperimentError::InvalidSpec(format!(
                    "gradient has length {}, matrix has order {n}",
                    g.len()
                )));
            }
            (ProblemOperator::File(a), g)
        }
        _ => {
            let d = spectrum(spec);
            let mut g = random_unit_vector(&mut rng, spec.n);
            match spec.params.similarity.unwrap_or(0) {
                0 => (ProblemOperator::Diagonal(DiagonalOperator::new(d)), g),
                r => {
                    let mut hrng = seeded_rng(spec.seed ^ SIMILARITY_STREAM);
                    let reflectors = (0..r)
                        .map(|_| {
                            HouseholderReflector::from_direction(&gaussian_vector(
                                &mut hrng, spec.n,
                            ))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let a = HouseholderSimilarity::new(d, reflectors);
                    // Same eigenbasis coordinates as the diagonal problem.
                    a.from_eigenbasis(&mut g);
                    (ProblemOperator::Similarity(a), g)
                }
            }
        }
    };
    Ok(Problem {
        spec: spec.clone(),
        a,
        g,
    })
}
