use super::{
    axpy, dot, norm2, random_unit_vector, seeded_rng, DenseMatrix, HouseholderReflector,
    LinalgError, LinearOperator, SymmetricLinearOperator,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `‖B‖₂` by power iteration on `BᵀB` from a seeded random start.
///
/// The estimate `‖Bv‖` (unit `v`) is a lower bound that increases
/// monotonically in exact arithmetic.
pub fn operator_norm2(op: &dyn LinearOperator, tol: f64, maxit: usize, seed: u64) -> NormEstimate {
    let n = op.ncols();
    assert!(n >= 1 && op.nrows() >= 1, "operator must be nonempty");
    let mut rng = seeded_rng(seed);
    let mut v = random_unit_vector(&mut rng, n);
    let mut w = vec![0.0; op.nrows()];
    let mut u = vec![0.0; n];
    let mut sigma = 0.0;
    for it in 1..=maxit {
        op.apply(&v, &mut w);
        let next = norm2(&w);
        op.apply_transpose(&w, &mut u);
        let un = norm2(&u);
        if un == 0.0 {
            // v is in the null space; nothing better reachable from here.
            return NormEstimate {
                value: next.max(sigma),
                converged: true,
                iterations: it,
            };
        }
        let change = (next - sigma).abs();
        sigma = next;
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = ui / un;
        }
        if it > 1 && change <= tol * sigma {
            return NormEstimate {
                value: sigma,
                converged: true,
                iterations: it,
            };
        }
    }
    // One more product with the final iterate, which is at least as good.
    op.apply(&v, &mut w);
    NormEstimate {
        value: norm2(&w).max(sigma),
        converged: false,
        iterations: maxit,
    }
}

/// `m × (m−1)` matrix whose orthonormal columns span `v⊥`, from a single
/// Householder reflector sending `v` to a multiple of `e₁`.
pub fn orthonormal_complement(v: &[f64]) -> Result<DenseMatrix, LinalgError> {
    let m = v.len();
    let nrm = norm2(v);
    if m == 0 || nrm == 0.0 || !nrm.is_finite() {
        return Err(LinalgError::ZeroVector);
    }
    let unit: Vec<f64> = v.iter().map(|x| x / nrm).collect();
    let mut z = DenseMatrix::zeros(m, m - 1);
    match HouseholderReflector::annihilating(&unit) {
        // v is already ±e₁
        None => {
            for j in 1..m {
                z[(j, j - 1)] = 1.0;
            }
        }
        Some(h) => {
            // H is symmetric, so its columns 1..m are H e_j.
            for j in 1..m {
                let mut e = vec![0.0; m];
                e[j] = 1.0;
                h.apply(&mut e);
                for i in 0..m {
                    z[(i, j - 1)] = e[i];
                }
            }
        }
    }
    Ok(z)
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Conjugate gradients for `(A + σI)x = b` with `A + σI ≻ 0`.
/// Stops when `‖r‖ ≤ tol·‖b‖`.
pub fn solve_shifted_cg(
    a: &dyn SymmetricLinearOperator,
    shift: f64,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> CgOutcome {
    let n = a.dim();
    let bn = norm2(b);
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return CgOutcome {
            x,
            converged: true,
            iterations: 0,
            residual: 0.0,
        };
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 1..=maxit {
        a.apply(&p, &mut ap);
        axpy(shift, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return CgOutcome {
                x,
                converged: false,
                iterations: it,
                residual: rr.sqrt(),
            };
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * bn {
            return CgOutcome {
                x,
                converged: true,
                iterations: it,
                residual: rr_new.sqrt(),
            };
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    CgOutcome {
        x,
        converged: false,
        iterations: maxit,
        residual: rr.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DiagonalOperator;

    #[test]
    fn norms_of_small_matrices() {
        let d = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, -5.0]]).unwrap();
        assert!((operator_norm2(&d, 1e-14, 1000, 1).value - 5.0).abs() < 1e-10);
        let i = DenseMatrix::identity(7);
        assert!((operator_norm2(&i, 1e-14, 1000, 1).value - 1.0).abs() < 1e-14);
        let nil = DenseMatrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert!((operator_norm2(&nil, 1e-14, 1000, 1).value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn complement_of_axis_and_diagonal() {
        let z = orthonormal_complement(&[1.0, 0.0]).unwrap();
        assert_eq!(z.cols(), 1);
        assert!(z[(0, 0)].abs() < 1e-15 && (z[(1, 0)].abs() - 1.0).abs() < 1e-15);

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let z = orthonormal_complement(&[r, r]).unwrap();
        assert!((z[(0, 0)].abs() - r).abs() < 1e-15);
        assert!((z[(0, 0)] + z[(1, 0)]).abs() < 1e-15);
    }

    #[test]
    fn complement_rejects_zero() {
        assert_eq!(
            orthonormal_complement(&[0.0, 0.0]),
            Err(LinalgError::ZeroVector)
        );
    }

    #[test]
    fn cg_on_diagonal() {
        let a = DiagonalOperator::new(vec![1.0, 2.0, 3.0]);
        let out = solve_shifted_cg(&a, 1.0, &[2.0, 3.0, 4.0], 1e-14, 10);
        assert!(out.converged);
        for xi in out.x {
            assert!((xi - 1.0).abs() < 1e-13);
        }
    }
}
