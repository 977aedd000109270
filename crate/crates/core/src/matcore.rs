//! Dense complex linear algebra.
//!
//! [`CMatrix`] is a row-major dense matrix of [`Complex64`]. Everything else in
//! the crate is built on it: Kronecker products, partial traces, Hermitian
//! eigendecompositions, positivity tests and Schatten norms.
//!
//! Eigen- and singular-value problems are delegated to `nalgebra`; the
//! conventions on top of it (ascending order, phase fix) are ours.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative Hermiticity tolerance used by default.
pub const HERM_TOL: f64 = 1e-10;
/// Relative positivity tolerance used by default.
pub const PSD_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows of real numbers.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cl = rows[0].len();
        Self::from_fn(r, cl, |i, j| re(rows[i][j]))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let cl = rows[0].len();
        Self::from_fn(r, cl, |i, j| rows[i][j])
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = re(x);
        }
        m
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Column vector from a slice.
    pub fn column(v: &[C64]) -> Self {
        Self::from_fn(v.len(), 1, |i, _| v[i])
    }

    /// `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// Matrix unit `E_ij` of size `n x n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Product `self * other`, checking shapes.
    pub fn try_mul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[p * m..(p + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(CMatrix { rows: n, cols: m, data: out })
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `[a, b] = ab - ba`.
    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) - &(other * self)
    }

    /// `A U A†`-style conjugation: returns `u * self * u†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> CMatrix {
        &(u * self) * &u.adjoint()
    }

    /// Entrywise distance `max |a_ij - b_ij|`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `‖A - A†‖` in the max-entry norm.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.is_square() && self.hermiticity_defect() <= rel_tol * self.max_abs().max(1.0)
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> CMatrix {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// `‖U†U - I‖` in the max-entry norm.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self).max_abs_diff(&CMatrix::identity(self.rows))
    }

    /// Every element of the matrix as a real-imaginary pair, row-major.
    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[CMatrix]) -> CMatrix {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let cl: usize = blocks.iter().map(|b| b.cols).sum();
        let mut m = CMatrix::zeros(r, cl);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    m[(r0 + i, c0 + j)] = b[(i, j)];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        m
    }

    /// Sub-block `[r0..r0+nr, c0..c0+nc]`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMatrix {
        CMatrix::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
    }
}

/// Wire format `{ "rows", "cols", "re": [...], "im": [...] }`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<CMatrix> {
        let n = j.rows * j.cols;
        if j.re.len() != n || !(j.im.is_empty() || j.im.len() == n) {
            return Err(Error::Shape(format!(
                "matrix JSON {}x{} carries {} real and {} imaginary entries",
                j.rows,
                j.cols,
                j.re.len(),
                j.im.len()
            )));
        }
        let data = (0..n)
            .map(|k| c(j.re[k], if j.im.is_empty() { 0.0 } else { j.im[k] }))
            .collect();
        CMatrix::from_vec(j.rows, j.cols, data)
    }
}

impl Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        CMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.try_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.map(|z| -z)
    }
}

// ---------------------------------------------------------------------------
// vectors

pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Returns `v / ‖v‖`, or an error for a (numerically) zero vector.
pub fn normalize(v: &[C64]) -> Result<Vec<C64>> {
    let n = vec_norm(v);
    if !(n > 1e-300) {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|z| z / n).collect())
}

// ---------------------------------------------------------------------------
// products and traces

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (q, r) = b.shape();
    CMatrix::from_fn(a.rows * q, a.cols * r, |row, col| {
        a[(row / q, col / r)] * b[(row % q, col % r)]
    })
}

/// Kronecker product of a sequence, left to right.
pub fn kron_all(ms: &[CMatrix]) -> CMatrix {
    let mut it = ms.iter();
    let first = it.next().expect("kron_all of an empty list").clone();
    it.fold(first, |acc, m| kron(&acc, m))
}

/// Partial trace over every tensor factor not listed in `keep`.
///
/// `dims` are the factor dimensions in Kronecker order; the kept factors
/// retain their relative order.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::Shape(format!("partial trace of a non-square {}x{} matrix", m.rows, m.cols)));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Shape("partial trace needs positive factor dimensions".into()));
    }
    let total: usize = dims.iter().product();
    if total != m.rows {
        return Err(Error::Shape(format!(
            "factor dimensions {dims:?} multiply to {total}, matrix side is {}",
            m.rows
        )));
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Shape(format!("kept factor index out of range in {keep:?}")));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let env_dim: usize = traced_dims.iter().product();

    // Strides of each factor in the full index.
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offset = |kept_idx: usize, env_idx: usize| -> usize {
        let mut full = 0;
        let mut rem = kept_idx;
        for (pos, &k) in keep_sorted.iter().enumerate().rev() {
            full += (rem % kept_dims[pos]) * strides[k];
            rem /= kept_dims[pos];
        }
        let mut rem = env_idx;
        for (pos, &k) in traced.iter().enumerate().rev() {
            full += (rem % traced_dims[pos]) * strides[k];
            rem /= traced_dims[pos];
        }
        full
    };

    let mut out = CMatrix::zeros(out_dim, out_dim);
    for i in 0..out_dim {
        for j in 0..out_dim {
            let mut s = ZERO;
            for e in 0..env_dim {
                s += m[(offset(i, e), offset(j, e))];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Frobenius (Hilbert–Schmidt) inner product `tr(a† b)`.
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "inner product of {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum())
}

// ---------------------------------------------------------------------------
// spectra

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues ascend; column `i` of `eigenvectors` belongs to `eigenvalues[i]`.
/// Each eigenvector's first component of largest modulus is real and
/// nonnegative. Inside a degenerate cluster the vectors are an arbitrary
/// orthonormal basis, so only cluster projectors are meaningful.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.col(i)
    }

    /// `V diag(f(λ)) V†`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        CMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fl[k] * v[(j, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_fn(|l| l)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
}

/// Hermitian eigendecomposition; rejects inputs with
/// `‖m - m†‖ > herm_tol · max(1, ‖m‖)` (max-entry norms).
pub fn hermitian_eig(m: &CMatrix, herm_tol: f64) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::Shape(format!("eigendecomposition of a {}x{} matrix", m.rows, m.cols)));
    }
    let defect = m.hermiticity_defect();
    if defect > herm_tol * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    let n = m.rows;
    let h = m.hermitian_part();
    let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v: Vec<C64> = (0..n).map(|i| eig.eigenvectors[(i, k)]).collect();
        let v = fix_phase(&v);
        for i in 0..n {
            vecs[(i, col)] = v[i];
        }
    }
    Ok(HermitianEig { eigenvalues, eigenvectors: vecs })
}

/// Rotates `v` so its first entry of largest modulus is real and nonnegative.
pub fn fix_phase(v: &[C64]) -> Vec<C64> {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        // first of the largest, up to rounding
        if z.norm() > best_abs * (1.0 + 1e-12) + 1e-300 {
            best = i;
            best_abs = z.norm();
        }
    }
    if best_abs <= 0.0 {
        return v.to_vec();
    }
    let phase = v[best].conj() / v[best].norm();
    v.iter().map(|z| z * phase).collect()
}

/// Eigenvalues of a general square matrix (complex Schur form).
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::Shape("eigenvalues of a non-square matrix".into()));
    }
    // the unshifted-deflation test at machine epsilon can stall on unitary
    // input; a slightly looser deflation threshold converges
    let a = m.to_nalgebra();
    for eps in [f64::EPSILON, 1e-15, 1e-14] {
        if let Some(schur) = nalgebra::linalg::Schur::try_new(a.clone(), eps, 10_000) {
            let (_, t) = schur.unpack();
            return Ok((0..m.rows).map(|i| t[(i, i)]).collect());
        }
    }
    Err(Error::Numerical("Schur iteration did not converge".into()))
}

/// Singular values, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let svd = m.to_nalgebra().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Schatten p-norm for `p >= 1`; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(m: &CMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("Schatten norm needs p >= 1, got {p}")));
    }
    let s = singular_values(m);
    if p.is_infinite() {
        return Ok(s.first().copied().unwrap_or(0.0));
    }
    if p == 1.0 {
        return Ok(s.iter().sum());
    }
    if p == 2.0 {
        return Ok(s.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok(s.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Positive semidefiniteness: min eigenvalue `>= -tol · max(1, ‖m‖)`.
///
/// Non-Hermitian input (beyond `tol`) is never PSD.
pub fn is_psd(m: &CMatrix, tol: f64) -> bool {
    match hermitian_eig(m, tol.max(HERM_TOL)) {
        Ok(e) => e.min() >= -tol * m.max_abs().max(1.0),
        Err(_) => false,
    }
}

/// Principal square root of a PSD matrix; eigenvalues within `-tol` of zero
/// are clipped.
pub fn psd_sqrt(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let e = hermitian_eig(m, HERM_TOL.max(tol))?;
    let floor = -tol * m.max_abs().max(1.0);
    if e.min() < floor {
        return Err(Error::Domain(format!(
            "square root of a matrix with eigenvalue {:.3e}",
            e.min()
        )));
    }
    Ok(e.apply_fn(|l| l.max(0.0).sqrt()))
}

/// Orthonormal basis (columns) of the null space of a Hermitian PSD Gram
/// matrix: eigenvectors whose eigenvalue is `<= tol · max(1, λ_max)`.
pub fn gram_nullspace(gram: &CMatrix, tol: f64) -> Result<Vec<Vec<C64>>> {
    let e = hermitian_eig(gram, 1e-8)?;
    let cut = tol * e.max().abs().max(1.0);
    Ok((0..e.eigenvalues.len())
        .filter(|&k| e.eigenvalues[k] <= cut)
        .map(|k| e.vector(k))
        .collect())
}

/// Common Pauli matrices and gates.
pub mod gates {
    use super::*;

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    pub fn hadamard() -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_real_rows(&[&[h, h], &[h, -h]])
    }

    /// SWAP on two qubits.
    pub fn swap() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 2)] = ONE;
        m[(2, 1)] = ONE;
        m[(3, 3)] = ONE;
        m
    }
}
