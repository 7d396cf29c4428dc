use super::{C64, ComplexMatrix, CVector, RANK_TOL, c};
use crate::error::{Error, Result};
use faer::Side;
use faer::linalg::solvers::DenseSolveCore;

/// Spectral decomposition with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Absolute threshold below which an eigenvalue counts as zero.
    pub fn cutoff(&self) -> f64 {
        let scale = self.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        RANK_TOL * scale
    }

    /// Indices of eigenvalues strictly above the rank cutoff.
    pub fn support(&self) -> Vec<usize> {
        let cut = self.cutoff();
        (0..self.dim()).filter(|&i| self.eigenvalues[i] > cut).collect()
    }

    pub fn rank(&self) -> usize {
        self.support().len()
    }

    /// Smallest eigenvalue on the support.
    pub fn lambda_min_support(&self) -> Option<f64> {
        self.support().last().map(|&i| self.eigenvalues[i])
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.eigenvectors.column(i)
    }

    /// `sum_{i in idx} w_i |v_i><v_i|`.
    pub fn weighted_sum(&self, idx: &[usize], w: impl Fn(usize) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let k = idx.len();
        let left = ComplexMatrix::from_fn(n, k, |r, j| v[(r, idx[j])] * w(idx[j]));
        let right = ComplexMatrix::from_fn(k, n, |j, cl| v[(cl, idx[j])].conj());
        &left * &right
    }

    pub fn support_projector(&self) -> ComplexMatrix {
        self.weighted_sum(&self.support(), |_| 1.0)
    }

    pub fn kernel_projector(&self) -> ComplexMatrix {
        let sup = self.support();
        let ker: Vec<usize> = (0..self.dim()).filter(|i| !sup.contains(i)).collect();
        self.weighted_sum(&ker, |_| 1.0)
    }

    /// Functional calculus on this decomposition; see [`mat_fn`].
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64, support_only: bool) -> Result<ComplexMatrix> {
        let cut = self.cutoff();
        let mut idx = Vec::new();
        let mut vals = vec![0.0; self.dim()];
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            if support_only && l.abs() <= cut {
                continue;
            }
            let y = f(l);
            if !y.is_finite() {
                return Err(Error::FunctionDomain { eigenvalue: l });
            }
            vals[i] = y;
            idx.push(i);
        }
        Ok(self.weighted_sum(&idx, |i| vals[i]))
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let all: Vec<usize> = (0..self.dim()).collect();
        self.weighted_sum(&all, |i| self.eigenvalues[i])
    }
}

/// Eigendecomposition of a (numerically) Hermitian matrix.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<HermitianEig> {
    let h = h.to_hermitian()?;
    let n = h.dim();
    if n == 0 {
        return Ok(HermitianEig { eigenvalues: vec![], eigenvectors: ComplexMatrix::zeros(0, 0) });
    }
    // The tridiagonal QR sweep can stall on exactly degenerate structured inputs (e.g.
    // maximally entangled projectors), and its iteration cap grows as n^2. A generic
    // reflection H h H breaks the structure without changing the spectrum. Large mostly
    // zero inputs take that route directly; everything else only on failure.
    let zeros = h.to_row_major().iter().filter(|z| **z == C64::ZERO).count();
    if n >= 32 && 2 * zeros > n * n {
        return reflected_eig(&h);
    }
    faer_eig(&h).or_else(|first| reflected_eig(&h).map_err(|_| first))
}

fn reflected_eig(h: &ComplexMatrix) -> Result<HermitianEig> {
    let w = reflection_vector(h.dim());
    let e = faer_eig(&reflect(&reflect(h, &w).adjoint(), &w).hermitian_part())?;
    let eigenvectors = reflect(&e.eigenvectors, &w);
    Ok(HermitianEig { eigenvalues: e.eigenvalues, eigenvectors })
}

fn faer_eig(h: &ComplexMatrix) -> Result<HermitianEig> {
    let n = h.dim();
    let e = h
        .faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("Hermitian eigensolver: {e:?}")))?;
    let s = e.S().column_vector();
    let u = e.U();
    // faer returns ascending order.
    let eigenvalues: Vec<f64> = (0..n).rev().map(|i| s[i].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, j| u[(r, n - 1 - j)]);
    Ok(HermitianEig { eigenvalues, eigenvectors })
}

/// Fixed unit vector with no exact symmetry relative to the standard basis.
fn reflection_vector(n: usize) -> CVector {
    let v: CVector = (0..n)
        .map(|i| {
            let t = i as f64 + 1.0;
            c((t * 0.754_877_666).fract() + 0.5, (t * 0.569_840_291).fract() - 0.5)
        })
        .collect();
    super::normalize(&v)
}

/// `(I - 2 w w^†) m` in O(n^2) for unit `w`.
fn reflect(m: &ComplexMatrix, w: &[C64]) -> ComplexMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    let proj: Vec<C64> = (0..cols).map(|j| (0..rows).map(|i| w[i].conj() * m[(i, j)]).sum()).collect();
    ComplexMatrix::from_fn(rows, cols, |i, j| m[(i, j)] - w[i] * proj[j] * 2.0)
}

/// `U f(Lambda) U^dagger`. With `support_only`, eigenvalues within the rank cutoff are
/// sent to zero instead of through `f`.
pub fn mat_fn(h: &ComplexMatrix, f: impl Fn(f64) -> f64, support_only: bool) -> Result<ComplexMatrix> {
    eig_hermitian(h)?.apply_fn(f, support_only)
}

/// Full SVD `M = U diag(s) V^dagger`, singular values descending.
pub fn svd(m: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let s = m.faer().svd().map_err(|e| Error::Linalg(format!("svd: {e:?}")))?;
    let sv = s.S().column_vector();
    let k = m.rows().min(m.cols());
    let vals = (0..k).map(|i| sv[i].re).collect();
    Ok((
        ComplexMatrix::from_faer(s.U().to_owned()),
        vals,
        ComplexMatrix::from_faer(s.V().to_owned()),
    ))
}

pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(vec![]);
    }
    m.faer().singular_values().map_err(|e| Error::Linalg(format!("svd: {e:?}")))
}

/// Orthonormal basis (as columns) of the right null space. A singular value counts as
/// zero when it is at most `rel_tol` times the largest one (or `rel_tol` if that is below 1).
pub fn null_space(m: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    let n = m.cols();
    if m.rows() == 0 {
        return Ok(ComplexMatrix::identity(n));
    }
    let (_, s, v) = svd(m)?;
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    let nonzero = s.iter().filter(|&&x| x > rel_tol * scale).count();
    let cols: Vec<CVector> = (nonzero..n).map(|j| v.column(j)).collect();
    Ok(ComplexMatrix::from_columns(n, &cols))
}

/// Orthonormal basis (as columns) of the column space.
pub fn range_basis(m: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    let r = m.rows();
    if m.cols() == 0 {
        return Ok(ComplexMatrix::zeros(r, 0));
    }
    let (u, s, _) = svd(m)?;
    let scale = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > rel_tol * scale && x > 0.0).count();
    let cols: Vec<CVector> = (0..rank).map(|j| u.column(j)).collect();
    Ok(ComplexMatrix::from_columns(r, &cols))
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
    }
    let inv = m.faer().partial_piv_lu().inverse();
    let out = ComplexMatrix::from_faer(inv);
    if !out.is_finite() {
        return Err(Error::Linalg("matrix is singular".into()));
    }
    Ok(out)
}

/// Eigenvalues of a general square matrix, unordered.
pub fn eigenvalues_general(m: &ComplexMatrix) -> Result<Vec<C64>> {
    if m.dim() == 0 {
        return Ok(vec![]);
    }
    let ev = m.faer().eigenvalues().map_err(|e| Error::Linalg(format!("eigensolver: {e:?}")))?;
    Ok(ev.into_iter().map(|z| c(z.re, z.im)).collect())
}
