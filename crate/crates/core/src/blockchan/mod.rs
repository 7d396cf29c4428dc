//! Idempotent channels and their algebraic structure.
//!
//! A channel is anything implementing [`Channel`]. The two concrete representations are
//! [`BlockIdempotent`] (structured form `U (⊕_l id_{A_l} ⊗ R_{ω_l}) U†`) and
//! [`Superoperator`] (dense transfer matrix). Wrappers add a reference system
//! ([`Extended`]) or restrict the input to a subspace ([`Restricted`]).

mod algebra;
mod block;
mod io;
mod superop;
mod three_layer;

pub use algebra::{
    ALGEBRA_TOL, AlgebraBasis, AlgebraBlocks, DEFAULT_SEED, algebra_blocks, common_invariant_state,
    fixed_point_algebra, inclusion_holds, inclusion_residual, multiplicative_domain_member,
    outside_projection,
};
pub use block::{Block, BlockIdempotent};
pub use io::{AnyChannel, BlockSpec, ChannelKind, ChannelSpec};
pub use superop::Superoperator;
pub use three_layer::{CommonData, ThreeLayer, three_layer_decompose};

use crate::error::{Error, Result};
use crate::matcore::{C64, ComplexMatrix, eig_hermitian};
use crate::states::DensityMatrix;

/// Linear map on operators. Implementations assume correctly sized inputs; the free
/// functions [`apply`] and [`adjoint_apply`] check dimensions first.
pub trait Channel: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix;
    fn adjoint_matrix(&self, y: &ComplexMatrix) -> ComplexMatrix;
}

fn check_square(x: &ComplexMatrix, d: usize, what: &str) -> Result<()> {
    if x.rows() != d || x.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected {d}x{d}, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

pub fn apply(ch: &dyn Channel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_square(rho.matrix(), ch.input_dim(), "channel input")?;
    Ok(DensityMatrix::assume(ch.apply_matrix(rho.matrix())))
}

pub fn apply_op(ch: &dyn Channel, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_square(x, ch.input_dim(), "channel input")?;
    Ok(ch.apply_matrix(x))
}

pub fn adjoint_apply(ch: &dyn Channel, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_square(y, ch.output_dim(), "adjoint input")?;
    Ok(ch.adjoint_matrix(y))
}

/// `sum_ij |i><j| ⊗ ch(|i><j|)`, input factor first.
pub fn choi(ch: &dyn Channel) -> ComplexMatrix {
    let (din, dout) = (ch.input_dim(), ch.output_dim());
    let mut j = ComplexMatrix::zeros(din * dout, din * dout);
    for a in 0..din {
        for b in 0..din {
            let out = ch.apply_matrix(&ComplexMatrix::matrix_unit(din, a, b));
            j.set_block(a * dout, b * dout, &out);
        }
    }
    j
}

/// Numerical rank at the global rank tolerance.
pub fn numerical_rank(x: &ComplexMatrix) -> Result<usize> {
    Ok(eig_hermitian(x)?.rank())
}

#[derive(Clone, Debug)]
pub struct IdentityChannel {
    pub dim: usize,
}

impl Channel for IdentityChannel {
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn output_dim(&self) -> usize {
        self.dim
    }
    fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        x.clone()
    }
    fn adjoint_matrix(&self, y: &ComplexMatrix) -> ComplexMatrix {
        y.clone()
    }
}

/// `id_r ⊗ inner`, reference factor first.
pub struct Extended<'a> {
    pub inner: &'a dyn Channel,
    pub reference: usize,
}

impl<'a> Extended<'a> {
    pub fn new(inner: &'a dyn Channel, reference: usize) -> Self {
        Self { inner, reference }
    }

    fn blockwise(&self, x: &ComplexMatrix, din: usize, dout: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
        let r = self.reference;
        let mut out = ComplexMatrix::zeros(r * dout, r * dout);
        for i in 0..r {
            for j in 0..r {
                let blk = x.submatrix(i * din, j * din, din, din);
                if blk.max_abs() == 0.0 {
                    continue;
                }
                out.set_block(i * dout, j * dout, &f(&blk));
            }
        }
        out
    }
}

impl Channel for Extended<'_> {
    fn input_dim(&self) -> usize {
        self.reference * self.inner.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.reference * self.inner.output_dim()
    }
    fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let (din, dout) = (self.inner.input_dim(), self.inner.output_dim());
        self.blockwise(x, din, dout, |b| self.inner.apply_matrix(b))
    }
    fn adjoint_matrix(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let (din, dout) = (self.inner.input_dim(), self.inner.output_dim());
        self.blockwise(y, dout, din, |b| self.inner.adjoint_matrix(b))
    }
}

/// `X ↦ inner(V X V†)` for an isometry `V` (columns orthonormal), optionally followed by
/// `Y ↦ V† Y V` on the output.
pub struct Restricted<'a> {
    pub inner: &'a dyn Channel,
    pub isometry: ComplexMatrix,
    pub compress_output: bool,
}

impl<'a> Restricted<'a> {
    pub fn new(inner: &'a dyn Channel, isometry: ComplexMatrix) -> Result<Self> {
        if isometry.rows() != inner.input_dim() {
            return Err(Error::DimensionMismatch("isometry does not match channel input".into()));
        }
        let g = &isometry.adjoint() * &isometry;
        if g.dist(&ComplexMatrix::identity(isometry.cols())) > 1e-9 {
            return Err(Error::OutOfRange("restriction map is not an isometry".into()));
        }
        Ok(Self { inner, isometry, compress_output: false })
    }

    /// Also compresses outputs to the range of `V`. Trace-preserving only when the inner
    /// channel maps that range into itself, which the caller must guarantee.
    pub fn compressed(mut self) -> Result<Self> {
        if self.inner.output_dim() != self.inner.input_dim() {
            return Err(Error::DimensionMismatch("output compression needs equal input and output dimensions".into()));
        }
        self.compress_output = true;
        Ok(self)
    }

    /// Restriction to the span of the given computational-frame columns of `frame`.
    pub fn to_columns(inner: &'a dyn Channel, frame: &ComplexMatrix, cols: &[usize]) -> Result<Self> {
        let v: Vec<Vec<C64>> = cols.iter().map(|&j| frame.column(j)).collect();
        Self::new(inner, ComplexMatrix::from_columns(frame.rows(), &v))
    }
}

impl Channel for Restricted<'_> {
    fn input_dim(&self) -> usize {
        self.isometry.cols()
    }
    fn output_dim(&self) -> usize {
        if self.compress_output { self.isometry.cols() } else { self.inner.output_dim() }
    }
    fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let y = self.inner.apply_matrix(&self.isometry.conjugate(x));
        if self.compress_output { self.isometry.conjugate_adj(&y) } else { y }
    }
    fn adjoint_matrix(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let y = if self.compress_output { self.isometry.conjugate(y) } else { y.clone() };
        self.isometry.conjugate_adj(&self.inner.adjoint_matrix(&y))
    }
}

/// Index permutation helper: `out[:, new] = m[:, perm[new]]`.
pub(crate) fn permute_columns(m: &ComplexMatrix, perm: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), perm.len(), |i, j| m[(i, perm[j])])
}
