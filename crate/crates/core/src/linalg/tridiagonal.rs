use serde::{Deserialize, Serialize};

use super::{DenseSymmetric, LinalgError};

/// Symmetric tridiagonal matrix stored as its two bands.
///
/// `diag` holds δ₀..δ_{m-1}, `offdiag` holds β₁..β_{m-1} where β_i couples
/// rows i-1 and i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricTridiagonal {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymmetricTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self, LinalgError> {
        if diag.is_empty() {
            return Err(LinalgError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: diag.len() - 1,
                got: offdiag.len(),
            });
        }
        if diag.iter().chain(&offdiag).any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(SymmetricTridiagonal { diag, offdiag })
    }

    /// Diagonal matrix (all off-diagonals zero).
    pub fn from_diagonal(diag: Vec<f64>) -> Result<Self, LinalgError> {
        let m = diag.len().saturating_sub(1);
        Self::new(diag, vec![0.0; m])
    }

    pub(crate) fn empty() -> Self {
        SymmetricTridiagonal {
            diag: Vec::new(),
            offdiag: Vec::new(),
        }
    }

    /// Append one row/column: `beta` couples the old last row with the new one.
    /// The first push ignores `beta`.
    pub(crate) fn push(&mut self, beta: f64, delta: f64) {
        if !self.diag.is_empty() {
            self.offdiag.push(beta);
        }
        self.diag.push(delta);
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Leading principal `m×m` submatrix.
    pub fn leading(&self, m: usize) -> SymmetricTridiagonal {
        assert!(m >= 1 && m <= self.order(), "leading block out of range");
        SymmetricTridiagonal {
            diag: self.diag[..m].to_vec(),
            offdiag: self.offdiag[..m - 1].to_vec(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.order();
        assert_eq!(x.len(), m);
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, xi)| d * xi).collect();
        for i in 1..m {
            let b = self.offdiag[i - 1];
            y[i] += b * x[i - 1];
            y[i - 1] += b * x[i];
        }
        y
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.order())
            .map(|i| {
                let mut r = self.diag[i].abs();
                if i > 0 {
                    r += self.offdiag[i - 1].abs();
                }
                if i + 1 < self.order() {
                    r += self.offdiag[i].abs();
                }
                r
            })
            .fold(0.0, f64::max)
    }

    /// Interval containing every eigenvalue (union of Gershgorin discs).
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.order() {
            let mut r = 0.0;
            if i > 0 {
                r += self.offdiag[i - 1].abs();
            }
            if i + 1 < self.order() {
                r += self.offdiag[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn to_dense(&self) -> DenseSymmetric {
        let m = self.order();
        let mut a = DenseSymmetric::zeros(m);
        for i in 0..m {
            a.set(i, i, self.diag[i]);
            if i > 0 {
                a.set(i, i - 1, self.offdiag[i - 1]);
            }
        }
        a
    }

    /// Number of eigenvalues strictly less than `x` (Sturm count via the
    /// LDLᵀ inertia of `T - xI`).
    pub fn sturm_count(&self, x: f64) -> usize {
        let max_b2 = self.offdiag.iter().map(|b| b * b).fold(1.0, f64::max);
        let pivmin = f64::MIN_POSITIVE * max_b2;
        let mut count = 0;
        let mut d = self.diag[0] - x;
        for i in 0..self.order() {
            if i > 0 {
                let b = self.offdiag[i - 1];
                d = self.diag[i] - x - b * b / d;
            }
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (0-based) by Sturm bisection.
    pub fn eigenvalue_bisect(&self, index: usize, tol: f64) -> f64 {
        assert!(index < self.order());
        let (mut lo, mut hi) = self.gershgorin();
        // Widen by a hair so the endpoints are strict brackets.
        let pad = f64::EPSILON * (lo.abs().max(hi.abs()) + 1.0);
        lo -= pad;
        hi += pad;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Default bisection tolerance: `1e-13` times the Gershgorin width.
    pub fn default_eig_tol(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        let w = hi - lo;
        if w > 0.0 {
            1e-13 * w
        } else {
            f64::MIN_POSITIVE
        }
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        self.eigenvalue_bisect(0, self.default_eig_tol())
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        self.eigenvalue_bisect(self.order() - 1, self.default_eig_tol())
    }
}

/// `(θ_min, θ_max)` of `t`, each within `tol` of the true value.
pub fn extremal_eig_tridiagonal(t: &SymmetricTridiagonal, tol: f64) -> (f64, f64) {
    assert!(tol > 0.0, "tolerance must be positive");
    (
        t.eigenvalue_bisect(0, tol),
        t.eigenvalue_bisect(t.order() - 1, tol),
    )
}

/// `T + λI = L·diag(d)·Lᵀ` with unit lower-bidiagonal `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlFactor {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl LdlFactor {
    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Subdiagonal of `L`; `l[i-1]` sits in row i.
    pub fn multipliers(&self) -> &[f64] {
        &self.l
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.d.len();
        assert_eq!(rhs.len(), m);
        let mut x = rhs.to_vec();
        for i in 1..m {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..m {
            x[i] /= self.d[i];
        }
        for i in (0..m.saturating_sub(1)).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
        x
    }
}

pub fn ldl_shifted(t: &SymmetricTridiagonal, shift: f64) -> Result<LdlFactor, LinalgError> {
    if !shift.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let m = t.order();
    let mut d = Vec::with_capacity(m);
    let mut l = Vec::with_capacity(m.saturating_sub(1));
    let d0 = t.diag[0] + shift;
    if !(d0 > 0.0) {
        return Err(LinalgError::IndefiniteShift {
            index: 0,
            pivot: d0,
        });
    }
    d.push(d0);
    for i in 1..m {
        let b = t.offdiag[i - 1];
        let li = b / d[i - 1];
        let di = t.diag[i] + shift - li * b;
        if !(di > 0.0) {
            return Err(LinalgError::IndefiniteShift {
                index: i,
                pivot: di,
            });
        }
        l.push(li);
        d.push(di);
    }
    Ok(LdlFactor { d, l })
}

/// Solve `(T + λI) h = rhs` for a positive-definite shift.
pub fn solve_shifted(
    t: &SymmetricTridiagonal,
    shift: f64,
    rhs: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    if rhs.len() != t.order() {
        return Err(LinalgError::DimensionMismatch {
            expected: t.order(),
            got: rhs.len(),
        });
    }
    Ok(ldl_shifted(t, shift)?.solve(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t2() -> SymmetricTridiagonal {
        SymmetricTridiagonal::new(vec![2.0, 2.0], vec![1.0]).unwrap()
    }

    #[test]
    fn ldl_two_by_two() {
        let f = ldl_shifted(&t2(), 0.0).unwrap();
        assert_eq!(f.pivots(), &[2.0, 1.5]);
        assert_eq!(f.multipliers(), &[0.5]);
    }

    #[test]
    fn ldl_scalar_shift() {
        let t = SymmetricTridiagonal::new(vec![2.0], vec![]).unwrap();
        assert_eq!(ldl_shifted(&t, 1.0).unwrap().pivots(), &[3.0]);
    }

    #[test]
    fn ldl_zero_pivot_is_indefinite() {
        let t = SymmetricTridiagonal::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        match ldl_shifted(&t, 0.0) {
            Err(LinalgError::IndefiniteShift { index, .. }) => assert_eq!(index, 0),
            other => panic!("expected IndefiniteShift, got {other:?}"),
        }
    }

    #[test]
    fn solves() {
        let t = SymmetricTridiagonal::new(vec![2.0], vec![]).unwrap();
        assert_eq!(solve_shifted(&t, 1.0, &[3.0]).unwrap(), vec![1.0]);

        let t = SymmetricTridiagonal::from_diagonal(vec![1.0, 2.0]).unwrap();
        assert_eq!(solve_shifted(&t, 0.0, &[1.0, 1.0]).unwrap(), vec![1.0, 0.5]);

        let h = solve_shifted(&t2(), 0.0, &[1.0, 0.0]).unwrap();
        assert!((h[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((h[1] + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn extremal_eigenvalues() {
        let (lo, hi) = extremal_eig_tridiagonal(&t2(), 1e-14);
        assert!((lo - 1.0).abs() < 1e-13 && (hi - 3.0).abs() < 1e-13);

        let t = SymmetricTridiagonal::new(vec![5.0], vec![]).unwrap();
        let (lo, hi) = extremal_eig_tridiagonal(&t, 1e-14);
        assert!((lo - 5.0).abs() < 1e-13 && (hi - 5.0).abs() < 1e-13);

        let t = SymmetricTridiagonal::from_diagonal(vec![-2.0, 0.0, 2.0]).unwrap();
        let (lo, hi) = extremal_eig_tridiagonal(&t, 1e-14);
        assert!((lo + 2.0).abs() < 1e-13 && (hi - 2.0).abs() < 1e-13);
    }

    #[test]
    fn sturm_counts_interior_points() {
        let t = SymmetricTridiagonal::from_diagonal(vec![-2.0, 0.0, 2.0]).unwrap();
        assert_eq!(t.sturm_count(-3.0), 0);
        assert_eq!(t.sturm_count(-1.0), 1);
        assert_eq!(t.sturm_count(1.0), 2);
        assert_eq!(t.sturm_count(3.0), 3);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SymmetricTridiagonal::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymmetricTridiagonal::new(vec![], vec![]).is_err());
        assert!(SymmetricTridiagonal::new(vec![f64::NAN], vec![]).is_err());
    }
}
