//! Dense complex matrices: SVD, pseudoinverse, norms, volume and an
//! exhaustive maximal-volume submatrix search for small matrices.

use std::fmt;
use std::ops::{Index, IndexMut, Mul, Sub};

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Iteration cap handed to the bidiagonal SVD sweep.
const SVD_MAX_ITER: usize = 10_000;
// nalgebra's default tolerance
const SVD_EPS: f64 = 5.0 * f64::EPSILON;

/// Largest number of candidate submatrices `maxvol_bruteforce` will visit.
pub const MAXVOL_BUDGET: u128 = 1_000_000;

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<Complex64>);

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        CMatrix(DMatrix::from_fn(rows, cols, f))
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[Complex64]) -> Self {
        CMatrix(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn as_inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        CMatrix(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        CMatrix(self.0.transpose())
    }

    pub fn scale(&self, s: f64) -> Self {
        CMatrix(self.0.map(|z| z * s))
    }

    /// Submatrix made of the listed rows and columns, in the listed order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.0[(rows[i], cols[j])])
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let cols: Vec<usize> = (0..self.ncols()).collect();
        self.select(rows, &cols)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let rows: Vec<usize> = (0..self.nrows()).collect();
        self.select(&rows, cols)
    }

    /// `[self, other]`.
    pub fn hstack(&self, other: &CMatrix) -> Result<Self> {
        if self.nrows() != other.nrows() {
            return invalid(format!(
                "hstack row mismatch: {} vs {}",
                self.nrows(),
                other.nrows()
            ));
        }
        let n = self.ncols();
        Ok(Self::from_fn(self.nrows(), n + other.ncols(), |i, j| {
            if j < n {
                self.0[(i, j)]
            } else {
                other.0[(i, j - n)]
            }
        }))
    }

    /// `[self; other]`.
    pub fn vstack(&self, other: &CMatrix) -> Result<Self> {
        if self.ncols() != other.ncols() {
            return invalid(format!(
                "vstack column mismatch: {} vs {}",
                self.ncols(),
                other.ncols()
            ));
        }
        let m = self.nrows();
        Ok(Self::from_fn(m + other.nrows(), self.ncols(), |i, j| {
            if i < m {
                self.0[(i, j)]
            } else {
                other.0[(i - m, j)]
            }
        }))
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn fro_norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.fro_norm_sqr().sqrt()
    }

    /// Checked matrix product.
    pub fn matmul(&self, rhs: &CMatrix) -> Result<Self> {
        if self.ncols() != rhs.nrows() {
            return invalid(format!(
                "product shape mismatch: {:?} x {:?}",
                self.shape(),
                rhs.shape()
            ));
        }
        Ok(CMatrix(&self.0 * &rhs.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.0.iter()
    }
}

impl From<DMatrix<Complex64>> for CMatrix {
    fn from(m: DMatrix<Complex64>) -> Self {
        CMatrix(m)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.0[idx]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    /// Panics on shape mismatch; use [`CMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix{:?}", self.shape())?;
        if self.nrows() * self.ncols() <= 64 {
            write!(f, "{}", self.0)?;
        }
        Ok(())
    }
}

/// Thin singular value decomposition `A = U diag(S) V*`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: CMatrix,
    /// Singular values, descending.
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> CMatrix {
        let (rows, r) = self.u.shape();
        let scaled = CMatrix::from_fn(rows, r, |i, j| self.u[(i, j)] * self.s[j]);
        &scaled * &self.v.adjoint()
    }
}

fn check_finite(a: &CMatrix) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        invalid("matrix has non-finite entries")
    }
}

fn descending_order(s: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    order
}

pub fn svd(a: &CMatrix) -> Result<SvdResult> {
    check_finite(a)?;
    let (rows, cols) = a.shape();
    let r = rows.min(cols);
    if r == 0 {
        return Ok(SvdResult {
            u: CMatrix::zeros(rows, 0),
            s: Vec::new(),
            v: CMatrix::zeros(cols, 0),
        });
    }
    let dec = a
        .0
        .clone()
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::NumericFailure(format!("SVD of {rows}x{cols} did not converge")))?;
    let (u, v_t) = match (dec.u, dec.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::NumericFailure("SVD factors missing".into())),
    };
    let raw: Vec<f64> = dec.singular_values.iter().copied().collect();
    let order = descending_order(&raw);
    let s = order.iter().map(|&k| raw[k]).collect();
    let u = CMatrix::from_fn(rows, r, |i, j| u[(i, order[j])]);
    let v = CMatrix::from_fn(cols, r, |i, j| v_t[(order[j], i)].conj());
    Ok(SvdResult { u, s, v })
}

/// Singular values only, descending.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    check_finite(a)?;
    let (rows, cols) = a.shape();
    if rows.min(cols) == 0 {
        return Ok(Vec::new());
    }
    let dec = a
        .0
        .clone()
        .try_svd(false, false, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::NumericFailure(format!("SVD of {rows}x{cols} did not converge")))?;
    let mut s: Vec<f64> = dec.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `max(rows, cols) * eps`, the relative cutoff used by [`pinv_default`].
pub fn default_rtol(a: &CMatrix) -> f64 {
    a.nrows().max(a.ncols()) as f64 * f64::EPSILON
}

/// Moore–Penrose pseudoinverse; singular values `<= rtol * sigma_1` are dropped.
pub fn pinv(a: &CMatrix, rtol: f64) -> Result<CMatrix> {
    if rtol.is_nan() || rtol < 0.0 {
        return invalid(format!("pinv tolerance must be nonnegative, got {rtol}"));
    }
    let (rows, cols) = a.shape();
    let dec = svd(a)?;
    let mut out = CMatrix::zeros(cols, rows);
    let Some(&s1) = dec.s.first() else {
        return Ok(out);
    };
    let cutoff = rtol * s1;
    for (k, &sk) in dec.s.iter().enumerate() {
        if sk <= cutoff || sk == 0.0 {
            break;
        }
        let inv = 1.0 / sk;
        for i in 0..cols {
            let vik = dec.v[(i, k)] * inv;
            for j in 0..rows {
                out[(i, j)] += vik * dec.u[(j, k)].conj();
            }
        }
    }
    Ok(out)
}

pub fn pinv_default(a: &CMatrix) -> Result<CMatrix> {
    pinv(a, default_rtol(a))
}

/// The `min(rows, cols)`-th singular value.
pub fn sigma_min(a: &CMatrix) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return invalid("sigma_min of an empty matrix");
    }
    let s = singular_values(a)?;
    Ok(*s.last().expect("nonempty"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Max,
    Frobenius,
    Spectral,
}

pub fn norm(a: &CMatrix, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Max => Ok(a.max_norm()),
        NormKind::Frobenius => Ok(a.fro_norm()),
        NormKind::Spectral => Ok(singular_values(a)?.first().copied().unwrap_or(0.0)),
    }
}

/// Product of the singular values.
pub fn volume(a: &CMatrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().product())
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Exhaustive search for the `s1 x s2` submatrix of maximal volume.
///
/// Indices are zero-based and ascending. Ties keep the lexicographically
/// smallest `(rows, cols)` pair.
pub fn maxvol_bruteforce(a: &CMatrix, s1: usize, s2: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let (rows, cols) = a.shape();
    if s1 == 0 || s2 == 0 || s1 > rows || s2 > cols {
        return invalid(format!(
            "submatrix size {s1}x{s2} not admissible for a {rows}x{cols} matrix"
        ));
    }
    let candidates = binomial(rows, s1).saturating_mul(binomial(cols, s2));
    if candidates > MAXVOL_BUDGET {
        return Err(Error::Capacity(format!(
            "{candidates} candidate submatrices exceed the budget of {MAXVOL_BUDGET}"
        )));
    }
    let col_sets: Vec<Vec<usize>> = (0..cols).combinations(s2).collect();
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for rs in (0..rows).combinations(s1) {
        for cs in &col_sets {
            let vol = volume(&a.select(&rs, cs))?;
            if best.as_ref().is_none_or(|(v, _, _)| vol > *v) {
                best = Some((vol, rs.clone(), cs.clone()));
            }
        }
    }
    let (_, r, c) = best.expect("at least one candidate");
    Ok((r, c))
}
