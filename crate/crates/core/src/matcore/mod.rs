//! Dense complex linear algebra kernel.
//!
//! Every matrix in the crate is a [`ComplexMatrix`]. Decompositions are delegated to
//! `faer`; the Hermitian calculus on top of them (support-restricted functions, partial
//! traces, Ky Fan sums) lives here so the tolerance conventions are applied uniformly.

mod decomp;
mod ops;

pub use decomp::{
    HermitianEig, eig_hermitian, eigenvalues_general, inverse, mat_fn, null_space, range_basis,
    singular_values, svd,
};
pub use ops::{
    direct_sum, direct_sum_all, ky_fan, partial_trace, schatten_norm, tensor, tensor_all,
    tensor_vec,
};

use crate::error::{Error, Result};
use faer::Mat;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub type C64 = num_complex::Complex64;
pub type CVector = Vec<C64>;

/// Eigenvalues at or below this fraction of the largest one count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Relative asymmetry below which a matrix is symmetrized instead of rejected.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Largest accepted matrix dimension.
pub const MAX_DIM: usize = 4096;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_DIM {
        Err(Error::TooLarge { dim, cap: MAX_DIM })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    m: Mat<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { m: Mat::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: Mat::identity(n, n) }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { m: Mat::from_fn(rows, cols, f) }
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::from_fn(rows, cols, |i, j| entries[i * cols + j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cl = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(r, cl, |i, j| c(rows[i][j], 0.0))
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { c(d[i], 0.0) } else { C64::ZERO })
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { d[i] } else { C64::ZERO })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, cols: &[CVector]) -> Self {
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    /// Rank-one operator `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// Projector onto a (not necessarily normalized) vector's ray.
    pub fn projector(u: &[C64]) -> Self {
        let n: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        Self::outer(u, u).scale_real(1.0 / n)
    }

    pub fn matrix_unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = C64::ONE;
        m
    }

    pub(crate) fn from_faer(m: Mat<C64>) -> Self {
        Self { m }
    }

    pub(crate) fn faer(&self) -> &Mat<C64> {
        &self.m
    }

    pub fn rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn cols(&self) -> usize {
        self.m.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        self.rows()
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.m[(i, j)]);
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> CVector {
        (0..self.rows()).map(|i| self.m[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint().to_owned() }
    }

    pub fn transpose(&self) -> Self {
        Self { m: self.m.transpose().to_owned() }
    }

    pub fn conj(&self) -> Self {
        Self { m: self.m.conjugate().to_owned() }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self::from_fn(self.rows(), self.cols(), |i, j| self.m[(i, j)] * k)
    }

    pub fn scale_real(&self, k: f64) -> Self {
        Self::from_fn(self.rows(), self.cols(), |i, j| self.m[(i, j)] * k)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows().min(self.cols())).map(|i| self.m[(i, i)]).sum()
    }

    /// Real part of the trace; the imaginary part is ignored.
    pub fn trace_re(&self) -> f64 {
        self.trace().re
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.m[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.to_row_major().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.to_row_major().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry of `|H - H^dagger|`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows(), self.cols(), |i, j| {
            (self.m[(i, j)] + self.m[(j, i)].conj()) * 0.5
        })
    }

    /// Symmetrizes a numerically Hermitian matrix; rejects larger asymmetry.
    pub fn to_hermitian(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        let tol = HERMITIAN_TOL * self.norm_inf().max(f64::MIN_POSITIVE);
        let asym = self.hermitian_asymmetry();
        if asym > tol {
            return Err(Error::NotHermitian { asymmetry: asym, tolerance: tol });
        }
        Ok(self.hermitian_part())
    }

    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self.m[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &ComplexMatrix) {
        for i in 0..block.rows() {
            for j in 0..block.cols() {
                self.m[(r0 + i, c0 + j)] = block.m[(i, j)];
            }
        }
    }

    pub fn add_block(&mut self, r0: usize, c0: usize, block: &ComplexMatrix) {
        for i in 0..block.rows() {
            for j in 0..block.cols() {
                self.m[(r0 + i, c0 + j)] += block.m[(i, j)];
            }
        }
    }

    /// Principal submatrix on an index list.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self.m[(idx[i], idx[j])])
    }

    pub fn apply(&self, v: &[C64]) -> CVector {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.m[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Row-major vectorization: entry `(i, j)` lands at index `i * cols + j`.
    pub fn vec(&self) -> CVector {
        self.to_row_major()
    }

    pub fn unvec(v: &[C64], rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| v[i * cols + j])
    }

    /// `Tr(A^dagger B)`.
    pub fn hs_inner(&self, other: &ComplexMatrix) -> C64 {
        let mut s = C64::ZERO;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                s += self.m[(i, j)].conj() * other.m[(i, j)];
            }
        }
        s
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> C64 {
        let mut s = C64::ZERO;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                s += self.m[(i, j)] * other.m[(j, i)];
            }
        }
        s
    }

    pub fn dist(&self, other: &ComplexMatrix) -> f64 {
        (self - other).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.to_row_major().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `U^dagger U = I` within `tol` entrywise.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && (&self.adjoint() * self).dist(&Self::identity(self.rows())) <= tol
    }

    /// `self * X * self^dagger`.
    pub fn conjugate(&self, x: &ComplexMatrix) -> Self {
        &(self * x) * &self.adjoint()
    }

    /// `self^dagger * X * self`.
    pub fn conjugate_adj(&self, x: &ComplexMatrix) -> Self {
        &(&self.adjoint() * x) * self
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.m[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.m[idx]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols(), rhs.rows(), "matrix product shape mismatch");
        ComplexMatrix { m: &self.m * &rhs.m }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows(), self.cols()), (rhs.rows(), rhs.cols()), "sum shape mismatch");
        ComplexMatrix { m: &self.m + &rhs.m }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows(), self.cols()), (rhs.rows(), rhs.cols()), "difference shape mismatch");
        ComplexMatrix { m: &self.m - &rhs.m }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dims: [usize; 2],
    re: Vec<f64>,
    #[serde(default)]
    im: Option<Vec<f64>>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let e = self.to_row_major();
        MatrixJson {
            dims: [self.rows(), self.cols()],
            re: e.iter().map(|z| z.re).collect(),
            im: Some(e.iter().map(|z| z.im).collect()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = MatrixJson::deserialize(d)?;
        let [r, cl] = j.dims;
        let n = r * cl;
        if j.re.len() != n {
            return Err(D::Error::custom(format!("field `re`: expected {n} entries for dims [{r},{cl}], got {}", j.re.len())));
        }
        let im = j.im.unwrap_or_else(|| vec![0.0; n]);
        if im.len() != n {
            return Err(D::Error::custom(format!("field `im`: expected {n} entries for dims [{r},{cl}], got {}", im.len())));
        }
        let entries: Vec<C64> = j.re.iter().zip(&im).map(|(a, b)| c(*a, *b)).collect();
        ComplexMatrix::from_row_major(r, cl, &entries).map_err(|e| D::Error::custom(e.to_string()))
    }
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &[C64]) -> CVector {
    let n = vec_norm(v);
    v.iter().map(|z| z / n).collect()
}

/// `<u|v>`, antilinear in the first slot.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let m = ComplexMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64 * 0.5));
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"dims\":[2,3]"));
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn json_rejects_bad_length() {
        let err = serde_json::from_str::<ComplexMatrix>(r#"{"dims":[2,2],"re":[1,0,0],"im":[0,0,0,0]}"#);
        assert!(err.unwrap_err().to_string().contains("re"));
    }

    #[test]
    fn json_defaults_missing_imaginary_part() {
        let m: ComplexMatrix = serde_json::from_str(r#"{"dims":[1,2],"re":[1,2]}"#).unwrap();
        assert_eq!(m[(0, 1)], c(2.0, 0.0));
    }

    #[test]
    fn symmetrizes_small_asymmetry_and_rejects_large() {
        let mut m = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        m[(0, 1)] = c(1e-13, 0.0);
        assert!(m.to_hermitian().unwrap().hermitian_asymmetry() == 0.0);
        m[(0, 1)] = c(1e-3, 0.0);
        match m.to_hermitian() {
            Err(Error::NotHermitian { asymmetry, .. }) => assert!((asymmetry - 1e-3).abs() < 1e-15),
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
