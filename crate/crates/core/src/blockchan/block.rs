use super::{Channel, Superoperator, permute_columns};
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, check_dim, ky_fan, partial_trace, tensor, tensor_all};
use crate::states::DensityMatrix;
use serde::{Deserialize, Serialize};

/// One summand `id_{A} ⊗ R_ω` acting on `A ⊗ B`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Block {
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
    pub omega: DensityMatrix,
}

impl Block {
    pub fn new(d_a: usize, d_b: usize, omega: DensityMatrix) -> Result<Self> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::OutOfRange("block dimensions must be positive".into()));
        }
        if omega.dim() != d_b {
            return Err(Error::DimensionMismatch(format!("omega has dimension {} but dB = {d_b}", omega.dim())));
        }
        if !omega.is_full_rank()? {
            return Err(Error::InvalidState("omega must be full rank".into()));
        }
        Ok(Self { d_a, d_b, omega })
    }

    pub fn dim(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn omega_inverse(&self) -> Result<ComplexMatrix> {
        self.omega.eig()?.apply_fn(|x| 1.0 / x, true)
    }

    /// Sum of the `min(dA, dB)` largest eigenvalues of `ω⁻¹`.
    pub fn ky_fan_inverse(&self) -> Result<f64> {
        ky_fan(&self.omega_inverse()?, self.d_a.min(self.d_b))
    }

    pub fn trace_inverse(&self) -> Result<f64> {
        Ok(self.omega.eig()?.eigenvalues.iter().map(|x| 1.0 / x).sum())
    }
}

/// `X ↦ U (⊕_l Tr_{B_l}(X_l) ⊗ ω_l) U†` where `X_l` is the `l`-th diagonal block of `U† X U`.
#[derive(Clone, Debug)]
pub struct BlockIdempotent {
    total_dim: usize,
    basis_change: ComplexMatrix,
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    trivial_basis: bool,
}

#[derive(Serialize, Deserialize)]
struct BlockIdempotentJson {
    total_dim: usize,
    basis_change: ComplexMatrix,
    blocks: Vec<Block>,
}

impl Serialize for BlockIdempotent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BlockIdempotentJson { total_dim: self.total_dim, basis_change: self.basis_change.clone(), blocks: self.blocks.clone() }
            .serialize(s)
    }
}

impl BlockIdempotent {
    pub fn new(basis_change: ComplexMatrix, blocks: Vec<Block>) -> Result<Self> {
        let total: usize = blocks.iter().map(|b| b.dim()).sum();
        check_dim(total)?;
        if blocks.is_empty() {
            return Err(Error::OutOfRange("at least one block is required".into()));
        }
        if basis_change.rows() != total || basis_change.cols() != total {
            return Err(Error::DimensionMismatch(format!(
                "blocks span dimension {total}, basis change is {}x{}",
                basis_change.rows(),
                basis_change.cols()
            )));
        }
        if !basis_change.is_unitary(1e-9) {
            return Err(Error::OutOfRange("basis change is not unitary".into()));
        }
        let trivial_basis = basis_change.dist(&ComplexMatrix::identity(total)) == 0.0;
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut o = 0;
        for b in &blocks {
            offsets.push(o);
            o += b.dim();
        }
        Ok(Self { total_dim: total, basis_change, blocks, offsets, trivial_basis })
    }

    pub fn standard(blocks: Vec<Block>) -> Result<Self> {
        let total: usize = blocks.iter().map(|b| b.dim()).sum();
        Self::new(ComplexMatrix::identity(total), blocks)
    }

    /// `R_ω` on `C^d`.
    pub fn replacer(omega: DensityMatrix) -> Result<Self> {
        let d = omega.dim();
        Self::standard(vec![Block::new(1, d, omega)?])
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::standard(vec![Block::new(d, 1, DensityMatrix::maximally_mixed(1))?])
    }

    /// Complete dephasing in the computational basis of `C^d`.
    pub fn dephasing(d: usize) -> Result<Self> {
        let blocks = (0..d).map(|_| Block::new(1, 1, DensityMatrix::maximally_mixed(1))).collect::<Result<_>>()?;
        Self::standard(blocks)
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn basis_change(&self) -> &ComplexMatrix {
        &self.basis_change
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn dims(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.d_a, b.d_b)).collect()
    }

    pub fn superoperator(&self) -> Result<Superoperator> {
        Superoperator::from_channel(self)
    }

    fn to_frame(&self, x: &ComplexMatrix) -> ComplexMatrix {
        if self.trivial_basis { x.clone() } else { self.basis_change.conjugate_adj(x) }
    }

    fn from_frame(&self, x: &ComplexMatrix) -> ComplexMatrix {
        if self.trivial_basis { x.clone() } else { self.basis_change.conjugate(x) }
    }

    /// Unit image `P(I)`; full rank by construction.
    pub fn unit_image(&self) -> ComplexMatrix {
        self.apply_matrix(&ComplexMatrix::identity(self.total_dim))
    }

    /// `id_r ⊗ self`, reference factor first, re-blocked as `(C^r ⊗ A_l) ⊗ B_l`.
    pub fn with_reference(&self, r: usize) -> Result<BlockIdempotent> {
        let d = self.total_dim;
        check_dim(r * d)?;
        let big = tensor(&ComplexMatrix::identity(r), &self.basis_change)?;
        let mut perm = Vec::with_capacity(r * d);
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (b, &o) in self.blocks.iter().zip(&self.offsets) {
            for i in 0..r {
                for al in 0..b.d_a {
                    for be in 0..b.d_b {
                        perm.push(i * d + o + al * b.d_b + be);
                    }
                }
            }
            blocks.push(Block { d_a: r * b.d_a, d_b: b.d_b, omega: b.omega.clone() });
        }
        BlockIdempotent::new(permute_columns(&big, &perm), blocks)
    }

    /// n-fold tensor power; blocks are indexed by multi-indices in lexicographic order.
    pub fn tensor_power(&self, n: usize) -> Result<BlockIdempotent> {
        if n == 0 || n > 3 {
            return Err(Error::OutOfRange(format!("tensor power n = {n} must be 1, 2 or 3")));
        }
        let d = self.total_dim;
        check_dim(d.pow(n as u32))?;
        let big = tensor_all(&vec![self.basis_change.clone(); n])?;
        let nb = self.blocks.len();
        let mut perm = Vec::new();
        let mut blocks = Vec::new();
        let mut multi = vec![0usize; n];
        loop {
            let bs: Vec<&Block> = multi.iter().map(|&l| &self.blocks[l]).collect();
            let a: usize = bs.iter().map(|b| b.d_a).product();
            let b: usize = bs.iter().map(|b| b.d_b).product();
            let omega = tensor_all(&bs.iter().map(|b| b.omega.matrix().clone()).collect::<Vec<_>>())?;
            for ai in 0..a {
                for bi in 0..b {
                    // Split the combined A and B indices into per-factor digits.
                    let (mut ra, mut rb) = (ai, bi);
                    let mut digits = vec![(0usize, 0usize); n];
                    for f in (0..n).rev() {
                        digits[f] = (ra % bs[f].d_a, rb % bs[f].d_b);
                        ra /= bs[f].d_a;
                        rb /= bs[f].d_b;
                    }
                    let mut old = 0;
                    for f in 0..n {
                        let local = self.offsets[multi[f]] + digits[f].0 * bs[f].d_b + digits[f].1;
                        old = old * d + local;
                    }
                    perm.push(old);
                }
            }
            blocks.push(Block { d_a: a, d_b: b, omega: DensityMatrix::assume(omega) });
            let mut f = n;
            loop {
                if f == 0 {
                    return BlockIdempotent::new(permute_columns(&big, &perm), blocks);
                }
                f -= 1;
                multi[f] += 1;
                if multi[f] < nb {
                    break;
                }
                multi[f] = 0;
            }
        }
    }

    /// Hilbert-Schmidt orthonormal basis of the fixed-point algebra `U (⊕ B(A_l) ⊗ 1) U†`.
    pub fn algebra_basis(&self) -> Vec<ComplexMatrix> {
        let mut out = Vec::new();
        for (b, &o) in self.blocks.iter().zip(&self.offsets) {
            let s = 1.0 / (b.d_b as f64).sqrt();
            for i in 0..b.d_a {
                for j in 0..b.d_a {
                    let mut m = ComplexMatrix::zeros(self.total_dim, self.total_dim);
                    for be in 0..b.d_b {
                        m[(o + i * b.d_b + be, o + j * b.d_b + be)] = crate::matcore::c(s, 0.0);
                    }
                    out.push(self.from_frame(&m));
                }
            }
        }
        out
    }
}

impl Channel for BlockIdempotent {
    fn input_dim(&self) -> usize {
        self.total_dim
    }
    fn output_dim(&self) -> usize {
        self.total_dim
    }
    fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let y = self.to_frame(x);
        let mut out = ComplexMatrix::zeros(self.total_dim, self.total_dim);
        for (b, &o) in self.blocks.iter().zip(&self.offsets) {
            let yl = y.submatrix(o, o, b.dim(), b.dim());
            let ra = partial_trace(&yl, &[b.d_a, b.d_b], &[0]).expect("block dims");
            out.set_block(o, o, &tensor(&ra, b.omega.matrix()).expect("block dims"));
        }
        self.from_frame(&out)
    }
    fn adjoint_matrix(&self, yy: &ComplexMatrix) -> ComplexMatrix {
        let y = self.to_frame(yy);
        let mut out = ComplexMatrix::zeros(self.total_dim, self.total_dim);
        for (b, &o) in self.blocks.iter().zip(&self.offsets) {
            let yl = y.submatrix(o, o, b.dim(), b.dim());
            let w = tensor(&ComplexMatrix::identity(b.d_a), b.omega.matrix()).expect("block dims");
            let ra = partial_trace(&(&yl * &w), &[b.d_a, b.d_b], &[0]).expect("block dims");
            out.set_block(o, o, &tensor(&ra, &ComplexMatrix::identity(b.d_b)).expect("block dims"));
        }
        self.from_frame(&out)
    }
}
