use super::{DenseMatrix, DenseSymmetric, LinalgError};

/// Cyclic sweeps allowed before giving up.
pub const JACOBI_SWEEP_BUDGET: usize = 30;

/// Eigenvalues in ascending order and the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }
}

/// Cyclic Jacobi eigensolver.
///
/// Stops once the off-diagonal Frobenius norm is at most
/// `max(tol/(2√m), ε)·‖A‖_F`, which leaves `‖AV − VΛ‖₂ ≤ tol·‖A‖₂` up to
/// rounding.
pub fn symmetric_eig_dense(a: &DenseSymmetric, tol: f64) -> Result<SymmetricEigen, LinalgError> {
    let m = a.order();
    let mut w = a.to_full();
    let mut v = DenseMatrix::identity(m);
    let frob = a.frobenius_norm();
    let threshold = (0.5 * tol / (m as f64).sqrt()).max(f64::EPSILON) * frob;

    let off_norm = |w: &DenseMatrix| {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..i {
                s += 2.0 * w[(i, j)] * w[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = frob == 0.0;
    for _sweep in 0..JACOBI_SWEEP_BUDGET {
        if converged || off_norm(&w) <= threshold {
            converged = true;
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = w[(p, p)];
                let aqq = w[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let wkp = w[(k, p)];
                    let wkq = w[(k, q)];
                    w[(k, p)] = c * wkp - s * wkq;
                    w[(k, q)] = s * wkp + c * wkq;
                }
                for k in 0..m {
                    let wpk = w[(p, k)];
                    let wqk = w[(q, k)];
                    w[(p, k)] = c * wpk - s * wqk;
                    w[(q, k)] = s * wpk + c * wqk;
                }
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                for k in 0..m {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off = off_norm(&w);
        if off > threshold {
            return Err(LinalgError::NoConvergence {
                sweeps: JACOBI_SWEEP_BUDGET,
                off_norm: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..m {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}
