use super::{dot, DenseMatrix, HouseholderReflector, LinalgError};

/// Explicit storage an operator may expose alongside its matvec.
#[derive(Debug, Clone, Copy)]
pub enum Storage<'a> {
    Implicit,
    Diagonal(&'a [f64]),
    Sparse(&'a SparseSymmetric),
    Dense(&'a DenseMatrix),
}

/// Symmetric `A` accessed through products `y = Ax`.
pub trait SymmetricLinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Overwrites `y` with `A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn storage(&self) -> Storage<'_> {
        Storage::Implicit
    }

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

/// General rectangular operator with products by `B` and `Bᵀ`.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.matvec(x));
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.matvec_transpose(x));
    }
}

/// Views a symmetric operator as a general one (`Aᵀ = A`).
pub struct SymmetricAsGeneral<'a>(pub &'a dyn SymmetricLinearOperator);

impl LinearOperator for SymmetricAsGeneral<'_> {
    fn nrows(&self) -> usize {
        self.0.dim()
    }
    fn ncols(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y)
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Self {
        DiagonalOperator { diag }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
}

impl SymmetricLinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = di * xi;
        }
    }

    fn storage(&self) -> Storage<'_> {
        Storage::Diagonal(&self.diag)
    }
}

/// Symmetric sparse matrix in CSR form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// From `(row, col, value)` triplets covering one triangle (or both, as
    /// long as mirrored entries agree). Off-diagonal entries are mirrored;
    /// duplicates are summed.
    pub fn from_triplets(
        n: usize,
        triplets: &[(usize, usize, f64)],
        one_triangle: bool,
    ) -> Result<Self, LinalgError> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    got: i.max(j) + 1,
                });
            }
            if !v.is_finite() {
                return Err(LinalgError::NonFinite);
            }
            entries.push((i, j, v));
            if one_triangle && i != j {
                entries.push((j, i, v));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let m = SparseSymmetric {
            n,
            row_ptr,
            col_idx,
            values,
        };
        if !one_triangle {
            m.check_symmetric()?;
        }
        Ok(m)
    }

    fn check_symmetric(&self) -> Result<(), LinalgError> {
        let scale = self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                let mirror = self.get(j, i);
                let gap = (self.values[p] - mirror).abs();
                if gap > 1e-12 * scale {
                    return Err(LinalgError::NotSymmetric {
                        row: i,
                        col: j,
                        gap,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(p) => self.values[self.row_ptr[i] + p],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[(i, self.col_idx[p])] = self.values[p];
            }
        }
        a
    }
}

impl SymmetricLinearOperator for SparseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
    }

    fn storage(&self) -> Storage<'_> {
        Storage::Sparse(self)
    }
}

/// Dense symmetric operator in full row-major storage (fast matvec).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    a: DenseMatrix,
}

impl DenseOperator {
    /// Fails unless `a` is square and symmetric to `1e-12` relative.
    pub fn new(a: DenseMatrix) -> Result<Self, LinalgError> {
        a.to_symmetric(1e-12)?;
        Ok(DenseOperator { a })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }
}

impl SymmetricLinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.a.row(i), x);
        }
    }

    fn storage(&self) -> Storage<'_> {
        Storage::Dense(&self.a)
    }
}

/// `A = H D Hᵀ` where `H = H₁H₂⋯H_r` is a product of Householder reflectors
/// and `D` is diagonal. The eigenvalues of `A` are exactly `D`.
#[derive(Debug, Clone)]
pub struct HouseholderSimilarity {
    diag: Vec<f64>,
    reflectors: Vec<HouseholderReflector>,
}

impl HouseholderSimilarity {
    pub fn new(diag: Vec<f64>, reflectors: Vec<HouseholderReflector>) -> Self {
        for r in &reflectors {
            assert_eq!(r.vector().len(), diag.len(), "reflector length mismatch");
        }
        HouseholderSimilarity { diag, reflectors }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `x ↦ Hᵀx` (coordinates in the eigenbasis).
    pub fn to_eigenbasis(&self, x: &mut [f64]) {
        for r in &self.reflectors {
            r.apply(x);
        }
    }

    /// `x ↦ Hx`.
    pub fn from_eigenbasis(&self, x: &mut [f64]) {
        for r in self.reflectors.iter().rev() {
            r.apply(x);
        }
    }
}

impl SymmetricLinearOperator for HouseholderSimilarity {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.to_eigenbasis(y);
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi *= d;
        }
        self.from_eigenbasis(y);
    }
}

/// Wraps a closure as a symmetric operator. Symmetry is the caller's
/// responsibility.
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Send + Sync> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnOperator { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Send + Sync> SymmetricLinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}
