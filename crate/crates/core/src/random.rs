//! Seeded random instances. Every generator takes an explicit RNG so runs are reproducible.

use crate::blockchan::{Block, BlockIdempotent, ThreeLayer};
use crate::error::Result;
use crate::matcore::{C64, CVector, ComplexMatrix, c, normalize};
use crate::states::DensityMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian with `E|z|^2 = 1`.
pub fn gaussian_c(r: &mut impl Rng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = r.sample(StandardNormal);
    let im: f64 = r.sample(StandardNormal);
    c(s * re, s * im)
}

pub fn gaussian_vector(n: usize, r: &mut impl Rng) -> CVector {
    (0..n).map(|_| gaussian_c(r)).collect()
}

pub fn ginibre(rows: usize, cols: usize, r: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_c(r))
}

pub fn random_hermitian(n: usize, r: &mut impl Rng) -> ComplexMatrix {
    ginibre(n, n, r).hermitian_part()
}

/// Haar-distributed unitary: Gram-Schmidt on a Ginibre matrix.
pub fn haar_unitary(n: usize, r: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(n, n, r);
    let mut cols: Vec<CVector> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        // Two passes keep the columns orthonormal to machine precision.
        for _ in 0..2 {
            for u in &cols {
                let p: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= p * y;
                }
            }
        }
        cols.push(normalize(&v));
    }
    ComplexMatrix::from_columns(n, &cols)
}

pub fn random_pure(n: usize, r: &mut impl Rng) -> CVector {
    normalize(&gaussian_vector(n, r))
}

/// Hilbert-Schmidt random density matrix of full rank (almost surely).
pub fn random_density(n: usize, r: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(n, n, r);
    let w = &g * &g.adjoint();
    let t = w.trace_re();
    DensityMatrix::assume(w.scale_real(1.0 / t))
}

/// Density matrix with spectrum bounded below by `floor / n`, for well-conditioned inverses.
pub fn random_full_rank(n: usize, floor: f64, r: &mut impl Rng) -> DensityMatrix {
    let s = random_density(n, r);
    let m = &s.matrix().scale_real(1.0 - floor) + &ComplexMatrix::identity(n).scale_real(floor / n as f64);
    DensityMatrix::assume(m)
}

pub fn random_probability(n: usize, floor: f64, r: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| r.random::<f64>() + floor).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Random block idempotent with the given `(dA, dB)` blocks and a Haar basis change.
pub fn random_block_idempotent(dims: &[(usize, usize)], r: &mut impl Rng) -> Result<BlockIdempotent> {
    let blocks: Vec<Block> = dims
        .iter()
        .map(|&(a, b)| Block::new(a, b, random_full_rank(b, 0.2, r)))
        .collect::<Result<_>>()?;
    let total = dims.iter().map(|(a, b)| a * b).sum();
    BlockIdempotent::new(haar_unitary(total, r), blocks)
}

/// Random nested pair with a common full-rank invariant state. Dimensions are drawn from
/// `1..=max_dim`; `b_{k,l}` may be zero as long as every `k` and every `l` keeps a block.
pub fn random_three_layer(k: usize, l: usize, max_dim: usize, r: &mut impl Rng) -> Result<ThreeLayer> {
    let draw = |r: &mut dyn rand::RngCore| 1 + (r.next_u32() as usize) % max_dim;
    let a: Vec<usize> = (0..l).map(|_| draw(r)).collect();
    let cdims: Vec<usize> = (0..k).map(|_| draw(r)).collect();
    let mut b = vec![vec![0usize; l]; k];
    loop {
        for row in b.iter_mut() {
            for x in row.iter_mut() {
                *x = if r.random::<f64>() < 0.25 { 0 } else { draw(r) };
            }
        }
        let rows_ok = b.iter().all(|row| row.iter().any(|&x| x > 0));
        let cols_ok = (0..l).all(|j| b.iter().any(|row| row[j] > 0));
        if rows_ok && cols_ok {
            break;
        }
    }
    let delta: Vec<DensityMatrix> = cdims.iter().map(|&n| random_full_rank(n, 0.2, r)).collect();
    let mut p = vec![vec![0.0; l]; k];
    let mut tau = vec![vec![None; l]; k];
    for j in 0..l {
        let ks: Vec<usize> = (0..k).filter(|&i| b[i][j] > 0).collect();
        let w = random_probability(ks.len(), 0.2, r);
        for (&i, &wi) in ks.iter().zip(&w) {
            p[i][j] = wi;
            tau[i][j] = Some(random_full_rank(b[i][j], 0.2, r));
        }
    }
    let total: usize = (0..k).map(|i| (0..l).map(|j| a[j] * b[i][j] * cdims[i]).sum::<usize>()).sum();
    ThreeLayer::from_common(a, b, cdims, haar_unitary(total, r), delta, p, tau)
}
