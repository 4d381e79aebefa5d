//! Dense complex Hermitian linear algebra.
//!
//! [`HermitianMatrix`] is the numeric carrier for every operator in the crate:
//! effects, joint POVM elements, SDP blocks and Kronecker products. Storage is
//! row-major with interleaved `(re, im)` pairs (`Complex64` is `repr(C)`).
//!
//! Eigendecompositions use a cyclic complex Jacobi sweep with a fixed pivot
//! order, so results are bit-reproducible for a given input and platform.
//!
//! Norms written `‖M‖_∞` below are the entrywise sup norm `max |m_ij|`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Default cap on matrix dimensions produced by [`kron`] and accepted by [`eig`].
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Default PSD tolerance for [`is_psd`].
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

/// Absolute floor of the PSD acceptance threshold.
pub const PSD_ABS_FLOOR: f64 = 1e-12;

/// Relative asymmetry accepted by [`HermitianMatrix::hermitize`].
pub const HERMITIZE_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows} rows, row {row} has {cols} entries")]
    NonSquare { rows: usize, row: usize, cols: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("matrix too far from Hermitian: asymmetry {asymmetry:e} vs scale {scale:e}")]
    TooAsymmetric { asymmetry: f64, scale: f64 },
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    ConvergenceFailure { sweeps: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense complex self-adjoint matrix.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "HermitianMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl HermitianMatrix {
    /// Symmetrizes `raw` into `(M + M*)/2`.
    ///
    /// Rejects ragged or non-finite input, and input whose asymmetry
    /// `max |m_ij - conj(m_ji)|` exceeds `1e-8 · max(‖M‖_∞, tiny)`.
    pub fn hermitize(raw: &[Vec<C64>]) -> Result<Self> {
        let (m, asymmetry) = Self::hermitize_report(raw)?;
        let scale = max_abs(&m.data).max(f64::MIN_POSITIVE);
        if asymmetry > HERMITIZE_TOL * scale {
            return Err(LinalgError::TooAsymmetric { asymmetry, scale });
        }
        Ok(m)
    }

    /// Like [`hermitize`](Self::hermitize) but never rejects on asymmetry;
    /// returns the symmetrized matrix with the measured asymmetry.
    pub fn hermitize_report(raw: &[Vec<C64>]) -> Result<(Self, f64)> {
        let n = raw.len();
        if n == 0 {
            return Err(LinalgError::Empty);
        }
        for (i, row) in raw.iter().enumerate() {
            if row.len() != n {
                return Err(LinalgError::NonSquare { rows: n, row: i, cols: row.len() });
            }
            for (j, z) in row.iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(LinalgError::NonFinite(i, j));
                }
            }
        }
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        let mut asymmetry = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let a = raw[i][j];
                let b = raw[j][i].conj();
                asymmetry = asymmetry.max((a - b).norm());
                data[i * n + j] = (a + b) * 0.5;
            }
        }
        Ok((Self { dim: n, data }, asymmetry))
    }

    /// Builds from a row-major buffer, symmetrizing. Crate-internal producers
    /// whose output is Hermitian up to rounding go through here.
    pub(crate) fn from_raw_symmetrize(dim: usize, mut data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        for i in 0..dim {
            data[i * dim + i].im = 0.0;
            for j in (i + 1)..dim {
                let avg = (data[i * dim + j] + data[j * dim + i].conj()) * 0.5;
                data[i * dim + j] = avg;
                data[j * dim + i] = avg.conj();
            }
        }
        Self { dim, data }
    }

    /// Builds from a closure evaluated on the upper triangle (`i <= j`); the lower
    /// triangle is filled by conjugation.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            let d = f(i, i);
            data[i * dim + i] = C64::new(d.re, 0.0);
            for j in (i + 1)..dim {
                let z = f(i, j);
                data[i * dim + j] = z;
                data[j * dim + i] = z.conj();
            }
        }
        Self { dim, data }
    }

    /// Real symmetric matrix from row-major entries (symmetrized).
    pub fn from_real(dim: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), dim * dim, "expected {} entries", dim * dim);
        let data = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_raw_symmetrize(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * dim + i] = C64::new(x, 0.0);
        }
        m
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_upper_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn pauli_y() -> Self {
        Self::from_upper_fn(2, |i, j| if i == 0 && j == 1 { C64::new(0.0, -1.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn pauli_z() -> Self {
        Self::from_diag(&[1.0, -1.0])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    /// Hilbert–Schmidt inner product `tr[A B]`, real for Hermitian arguments.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in inner product");
        self.data.iter().zip(&other.data).map(|(a, b)| (a * b.conj()).re).sum()
    }

    /// Entrywise sup norm `max |m_ij|`.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b * s).collect(),
        }
    }

    /// `A²`.
    pub fn square(&self) -> Self {
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * self.data[k * n + j];
                }
            }
        }
        Self::from_raw_symmetrize(n, out)
    }

    /// `V* A V` for a `d × k` matrix `V`.
    pub fn congruence(&self, v: &ComplexMatrix) -> Self {
        assert_eq!(v.rows(), self.dim, "congruence: V must have {} rows", self.dim);
        let av = ComplexMatrix::from_hermitian(self).matmul(v);
        let out = v.adjoint().matmul(&av);
        Self::from_raw_symmetrize(out.rows(), out.data)
    }

    /// `A ⊕ B`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let n = self.dim + other.dim;
        let (a, b) = (self.dim, other.dim);
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..a {
            data[i * n..i * n + a].copy_from_slice(&self.data[i * a..(i + 1) * a]);
        }
        for i in 0..b {
            data[(a + i) * n + a..(a + i) * n + n].copy_from_slice(&other.data[i * b..(i + 1) * b]);
        }
        Self { dim: n, data }
    }

    /// Entrywise complex conjugate (equal to the transpose for Hermitian matrices).
    pub fn conj_entrywise(&self) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn to_complex_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_hermitian(self)
    }

    /// Largest asymmetry `max |m_ij − conj(m_ji)|` (zero by construction unless
    /// produced through unchecked paths; exposed for diagnostics).
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }

    pub fn eig(&self) -> Result<EigenDecomposition> {
        eig(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(self)
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(*eigenvalues(self)?.last().expect("dim >= 1"))
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        is_psd(self, tol)
    }

    pub fn op_norm(&self) -> Result<f64> {
        op_norm(self)
    }
}

fn max_abs(data: &[C64]) -> f64 {
    data.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        self.add_scaled(-1.0, rhs)
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, s: f64) -> HermitianMatrix {
        self.scale(s)
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        self.scale(-1.0)
    }
}

impl AddAssign<&HermitianMatrix> for HermitianMatrix {
    fn add_assign(&mut self, rhs: &HermitianMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// Wire form `{"dim": d, "re": [[...]], "im": [[...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    fn from_entries(rows: usize, cols: usize, data: &[C64]) -> Self {
        let re = (0..rows).map(|i| (0..cols).map(|j| data[i * cols + j].re).collect()).collect();
        let im = (0..rows).map(|i| (0..cols).map(|j| data[i * cols + j].im).collect()).collect();
        Self { dim: rows, re, im }
    }

    fn to_rows(&self) -> std::result::Result<Vec<Vec<C64>>, String> {
        if self.re.len() != self.dim || self.im.len() != self.dim {
            return Err(format!("expected {} rows in re and im", self.dim));
        }
        self.re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| {
                if r.len() != i.len() {
                    return Err("re and im rows differ in length".to_string());
                }
                Ok(r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)).collect())
            })
            .collect()
    }
}

impl From<&HermitianMatrix> for MatrixJson {
    fn from(m: &HermitianMatrix) -> Self {
        Self::from_entries(m.dim, m.dim, &m.data)
    }
}

impl TryFrom<MatrixJson> for HermitianMatrix {
    type Error = String;
    fn try_from(j: MatrixJson) -> std::result::Result<Self, String> {
        let rows = j.to_rows()?;
        HermitianMatrix::hermitize(&rows).map_err(|e| e.to_string())
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        HermitianMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// General dense complex matrix (row-major). Used for eigenvector bases,
/// isometries and unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn from_hermitian(m: &HermitianMatrix) -> Self {
        Self { rows: m.dim, cols: m.dim, data: m.data.clone() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `max |(V*V − I)_ij|`.
    pub fn isometry_defect(&self) -> f64 {
        let g = self.adjoint().matmul(self);
        let mut worst = 0.0f64;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Interprets a square matrix as Hermitian, rejecting large asymmetry.
    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        if self.rows != self.cols {
            return Err(LinalgError::NonSquare { rows: self.rows, row: 0, cols: self.cols });
        }
        let rows: Vec<Vec<C64>> =
            (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec()).collect();
        HermitianMatrix::hermitize(&rows)
    }

    pub fn to_json(&self) -> MatrixJson {
        assert_eq!(self.rows, self.cols, "matrix JSON requires a square matrix");
        MatrixJson::from_entries(self.rows, self.cols, &self.data)
    }
}

/// Eigenvalues ascending; eigenvectors as the columns of a unitary matrix in the
/// same order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `U diag(λ) U*`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let n = self.eigenvalues.len();
        let u = &self.eigenvectors;
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| u.get(i, j) * self.eigenvalues[j]);
        let out = scaled.matmul(&u.adjoint());
        HermitianMatrix::from_raw_symmetrize(n, out.data)
    }

    /// `(‖U diag(λ) U* − M‖_∞, ‖U*U − I‖_∞)`.
    pub fn residuals(&self, m: &HermitianMatrix) -> (f64, f64) {
        let rec = (&self.reconstruct() - m).max_abs();
        (rec, self.eigenvectors.isometry_defect())
    }

    /// Applies `f` to the spectrum: `U diag(f(λ)) U*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let mapped = EigenDecomposition {
            eigenvalues: self.eigenvalues.iter().map(|&x| f(x)).collect(),
            eigenvectors: self.eigenvectors.clone(),
        };
        mapped.reconstruct()
    }
}

/// Standard Kronecker product with the default dimension cap.
pub fn kron(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    kron_with_cap(a, b, DEFAULT_DIM_CAP)
}

pub fn kron_with_cap(a: &HermitianMatrix, b: &HermitianMatrix, cap: usize) -> Result<HermitianMatrix> {
    let n = a.dim.saturating_mul(b.dim);
    if n > cap {
        return Err(LinalgError::DimensionOverflow { dim: n, cap });
    }
    let (da, db) = (a.dim, b.dim);
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..da {
        for j in 0..da {
            let x = a.data[i * da + j];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    data[(i * db + k) * n + (j * db + l)] = x * b.data[k * db + l];
                }
            }
        }
    }
    Ok(HermitianMatrix { dim: n, data })
}

/// Hermitian eigendecomposition with the default dimension cap.
pub fn eig(m: &HermitianMatrix) -> Result<EigenDecomposition> {
    eig_with_cap(m, DEFAULT_DIM_CAP)
}

pub fn eig_with_cap(m: &HermitianMatrix, cap: usize) -> Result<EigenDecomposition> {
    if m.dim > cap {
        return Err(LinalgError::DimensionOverflow { dim: m.dim, cap });
    }
    let n = m.dim;
    let mut a = m.data.clone();
    let mut v = ComplexMatrix::identity(n);
    jacobi_sweeps(&mut a, n, Some(&mut v.data))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let eigenvalues = order.iter().map(|&i| a[i * n + i].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Ascending eigenvalues only (skips eigenvector accumulation).
pub fn eigenvalues(m: &HermitianMatrix) -> Result<Vec<f64>> {
    if m.dim > DEFAULT_DIM_CAP {
        return Err(LinalgError::DimensionOverflow { dim: m.dim, cap: DEFAULT_DIM_CAP });
    }
    let n = m.dim;
    let mut a = m.data.clone();
    jacobi_sweeps(&mut a, n, None)?;
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Cyclic Jacobi on a row-major Hermitian buffer. On return `a` is diagonal up
/// to rounding; `v`, when given, accumulates the rotations (`A = V Λ V*`).
fn jacobi_sweeps(a: &mut [C64], n: usize, mut v: Option<&mut [C64]>) -> Result<()> {
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 1 || total == 0.0 {
        return Ok(());
    }
    let target = f64::EPSILON * 0.5 * total;
    let mut off = off_diagonal_norm(a, n);
    let mut sweeps = 0;
    while off > target {
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::ConvergenceFailure { sweeps, residual: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // Negligible against both diagonal entries: drop it.
                if sweeps > 3 && app.abs() + 1e3 * mag == app.abs() && aqq.abs() + 1e3 * mag == aqq.abs() {
                    a[p * n + q] = C64::new(0.0, 0.0);
                    a[q * n + p] = C64::new(0.0, 0.0);
                    continue;
                }
                let w = apq / mag;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let wc = w.conj();
                // A ← A R with R = [[c, s], [-s w̄, c w̄]]
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = arp * c - arq * wc * s;
                    a[r * n + q] = arp * s + arq * wc * c;
                }
                // A ← R* A
                for r in 0..n {
                    let apr = a[p * n + r];
                    let aqr = a[q * n + r];
                    a[p * n + r] = apr * c - aqr * w * s;
                    a[q * n + r] = apr * s + aqr * w * c;
                }
                a[p * n + q] = C64::new(0.0, 0.0);
                a[q * n + p] = C64::new(0.0, 0.0);
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
                if let Some(v) = v.as_deref_mut() {
                    for r in 0..n {
                        let vrp = v[r * n + p];
                        let vrq = v[r * n + q];
                        v[r * n + p] = vrp * c - vrq * wc * s;
                        v[r * n + q] = vrp * s + vrq * wc * c;
                    }
                }
            }
        }
        off = off_diagonal_norm(a, n);
    }
    Ok(())
}

fn off_diagonal_norm(a: &[C64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

pub fn min_eigenvalue(m: &HermitianMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?[0])
}

/// `min_eigenvalue(m) ≥ −max(tol · max(1, ‖m‖_∞), 1e−12)`.
pub fn is_psd(m: &HermitianMatrix, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -psd_threshold(m, tol))
}

pub(crate) fn psd_threshold(m: &HermitianMatrix, tol: f64) -> f64 {
    (tol * m.max_abs().max(1.0)).max(PSD_ABS_FLOOR)
}

/// Operator norm: largest absolute eigenvalue.
pub fn op_norm(m: &HermitianMatrix) -> Result<f64> {
    let ev = eigenvalues(m)?;
    Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
}

pub fn conj_entrywise(m: &HermitianMatrix) -> HermitianMatrix {
    m.conj_entrywise()
}
