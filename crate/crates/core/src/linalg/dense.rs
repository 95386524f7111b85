use std::ops::{Index, IndexMut};

use super::{dot, LinalgError, SymmetricTridiagonal};

/// Symmetric matrix in packed lower-triangular storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    order: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl DenseSymmetric {
    pub fn zeros(order: usize) -> Self {
        assert!(order >= 1, "order must be at least 1");
        DenseSymmetric {
            order,
            packed: vec![0.0; order * (order + 1) / 2],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut a = Self::zeros(order);
        for i in 0..order {
            a.set(i, i, 1.0);
        }
        a
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut a = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            a.set(i, i, v);
        }
        a
    }

    /// Build from full rows, checking symmetry to `1e-12` relative.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let m = rows.len();
        let mut a = Self::zeros(m.max(1));
        if m == 0 {
            return Err(LinalgError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let scale = rows
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(LinalgError::DimensionMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
            for j in 0..=i {
                let (x, y) = (row[j], rows[j][i]);
                if !x.is_finite() || !y.is_finite() {
                    return Err(LinalgError::NonFinite);
                }
                let gap = (x - y).abs();
                if gap > 1e-12 * scale {
                    return Err(LinalgError::NotSymmetric {
                        row: i,
                        col: j,
                        gap,
                    });
                }
                a.set(i, j, 0.5 * (x + y));
            }
        }
        Ok(a)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.packed[packed_index(i, j)] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.order;
        assert_eq!(x.len(), m);
        let mut y = vec![0.0; m];
        for i in 0..m {
            let row = &self.packed[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
            let mut acc = 0.0;
            for j in 0..i {
                acc += row[j] * x[j];
                y[j] += row[j] * x[i];
            }
            y[i] += acc + row[i] * x[i];
        }
        y
    }

    pub fn to_full(&self) -> DenseMatrix {
        let m = self.order;
        let mut a = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] = self.get(i, j);
            }
        }
        a
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.order {
            for j in 0..=i {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    /// Householder reduction to tridiagonal form (eigenvalues only, the
    /// orthogonal factor is discarded).
    pub fn tridiagonalize(&self) -> SymmetricTridiagonal {
        let m = self.order;
        let mut a = self.to_full();
        let mut p = vec![0.0; m];
        for k in 0..m.saturating_sub(2) {
            let x: Vec<f64> = (k + 1..m).map(|i| a[(i, k)]).collect();
            let Some(h) = HouseholderReflector::annihilating(&x) else {
                continue;
            };
            let v = h.vector();
            let len = v.len();
            // A22 <- H A22 H with H = I - 2vvᵀ (v unit), via the rank-2 update
            // A22 - v wᵀ - w vᵀ, w = 2p - 2(vᵀp)v, p = A22 v.
            for i in 0..len {
                let mut acc = 0.0;
                for j in 0..len {
                    acc += a[(k + 1 + i, k + 1 + j)] * v[j];
                }
                p[i] = acc;
            }
            let vp = dot(&v[..len], &p[..len]);
            for i in 0..len {
                p[i] = 2.0 * p[i] - 2.0 * vp * v[i];
            }
            for i in 0..len {
                for j in 0..len {
                    a[(k + 1 + i, k + 1 + j)] -= v[i] * p[j] + p[i] * v[j];
                }
            }
            let alpha = h.image();
            a[(k + 1, k)] = alpha;
            a[(k, k + 1)] = alpha;
            for i in k + 2..m {
                a[(i, k)] = 0.0;
                a[(k, i)] = 0.0;
            }
        }
        let diag = (0..m).map(|i| a[(i, i)]).collect();
        let off = (1..m).map(|i| a[(i, i - 1)]).collect();
        SymmetricTridiagonal::new(diag, off).expect("finite input gives finite bands")
    }
}

/// General dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 1.0;
        }
        a
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (yj, a) in y.iter_mut().zip(self.row(i)) {
                *yj += a * xi;
            }
        }
        y
    }

    pub fn matmul(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, b.rows);
        let mut c = DenseMatrix::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let brow = b.row(k);
                let crow = &mut c.data[i * b.cols..(i + 1) * b.cols];
                for (cj, bj) in crow.iter_mut().zip(brow) {
                    *cj += a * bj;
                }
            }
        }
        c
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest column 2-norm; a lower bound on the spectral norm.
    pub fn max_column_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self[(i, j)].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `self - mu·I` (square only).
    pub fn shifted(&self, mu: f64) -> DenseMatrix {
        assert_eq!(self.rows, self.cols);
        let mut a = self.clone();
        for i in 0..self.rows {
            a[(i, i)] -= mu;
        }
        a
    }

    /// `AᵀA` as a packed symmetric matrix.
    pub fn gram(&self) -> DenseSymmetric {
        let mut g = DenseSymmetric::zeros(self.cols.max(1));
        let t = self.transpose();
        for i in 0..self.cols {
            for j in 0..=i {
                g.set(i, j, dot(t.row(i), t.row(j)));
            }
        }
        g
    }

    /// Symmetric part, checked against `tol` relative asymmetry.
    pub fn to_symmetric(&self, tol: f64) -> Result<DenseSymmetric, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        let scale = self.max_abs();
        let mut s = DenseSymmetric::zeros(self.rows.max(1));
        for i in 0..self.rows {
            for j in 0..=i {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                if gap > tol * scale {
                    return Err(LinalgError::NotSymmetric {
                        row: i,
                        col: j,
                        gap,
                    });
                }
                s.set(i, j, 0.5 * (self[(i, j)] + self[(j, i)]));
            }
        }
        Ok(s)
    }

    pub fn lu(&self) -> Result<LuFactor, LinalgError> {
        LuFactor::new(self)
    }
}

/// `PA = LU` with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactor {
    fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        let n = a.rows;
        if a.cols != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: a.cols,
            });
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pv == 0.0 || !pv.is_finite() {
                return Err(LinalgError::Singular { index: k });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.data.swap(p * n + j, k * n + j);
                }
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(LuFactor { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }
}

/// Reflector `H = I - 2vvᵀ` with unit `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholderReflector {
    v: Vec<f64>,
    image: f64,
}

impl HouseholderReflector {
    /// Reflector mapping `x` to `image·e₁`; `None` when `x` is already a
    /// multiple of `e₁` (including zero).
    pub fn annihilating(x: &[f64]) -> Option<Self> {
        let tail: f64 = x[1..].iter().map(|v| v * v).sum();
        if tail == 0.0 {
            return None;
        }
        let nrm = (x[0] * x[0] + tail).sqrt();
        let alpha = if x[0] >= 0.0 { -nrm } else { nrm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vn = super::norm2(&v);
        for vi in v.iter_mut() {
            *vi /= vn;
        }
        Some(HouseholderReflector { v, image: alpha })
    }

    /// Reflector from an arbitrary nonzero direction (normalized here).
    pub fn from_direction(w: &[f64]) -> Result<Self, LinalgError> {
        let n = super::norm2(w);
        if n == 0.0 || !n.is_finite() {
            return Err(LinalgError::ZeroVector);
        }
        Ok(HouseholderReflector {
            v: w.iter().map(|x| x / n).collect(),
            image: 0.0,
        })
    }

    pub fn vector(&self) -> &[f64] {
        &self.v
    }

    /// The value `Hx` takes in its first entry for the vector `x` this
    /// reflector was built to annihilate.
    pub fn image(&self) -> f64 {
        self.image
    }

    pub fn apply(&self, x: &mut [f64]) {
        let c = 2.0 * dot(&self.v, x);
        super::axpy(-c, &self.v, x);
    }

    /// `H A H` in O(m²) via a rank-2 update; `A` need not be symmetric.
    pub fn similarity(&self, a: &DenseMatrix) -> DenseMatrix {
        let m = self.v.len();
        assert!(a.rows == m && a.cols == m);
        let v = &self.v;
        // HAH = A - 2v(vᵀA) - 2(Av)vᵀ + 4(vᵀAv)vvᵀ
        let av = a.matvec(v);
        let va = a.matvec_transpose(v);
        let vav = dot(v, &av);
        let mut out = a.clone();
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] += -2.0 * v[i] * va[j] - 2.0 * av[i] * v[j] + 4.0 * vav * v[i] * v[j];
            }
        }
        out
    }
}
