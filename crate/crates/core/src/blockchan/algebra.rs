//! Fixed-point algebras of idempotent channels and their block structure.

use super::{Channel, Superoperator, numerical_rank};
use crate::error::{Error, Result};
use crate::matcore::{
    CVector, C64, ComplexMatrix, eig_hermitian, null_space, partial_trace, range_basis, tensor,
};
use crate::random::{SeededRng, gaussian_c, rng};
use crate::states::DensityMatrix;

/// Tolerance for algebra membership, closure and block-sparsity checks.
pub const ALGEBRA_TOL: f64 = 1e-8;
/// Eigenvalues of a normalized random element closer than this are treated as one cluster.
pub const COLLISION_TOL: f64 = 1e-7;
/// Attempts with fresh random elements before a degenerate spectrum is reported.
pub const MAX_RETRIES: usize = 8;
/// Seed used when a caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x1de4;

const RANGE_TOL: f64 = 1e-9;

/// Hilbert-Schmidt orthonormal basis of a unital *-subalgebra of `B(C^d)`.
#[derive(Clone, Debug)]
pub struct AlgebraBasis {
    dim: usize,
    elements: Vec<ComplexMatrix>,
    /// Columns are `vec` of the elements; orthonormal.
    columns: ComplexMatrix,
}

impl AlgebraBasis {
    /// Orthonormalizes the span of `elements`. No closure check is made here.
    pub fn span(dim: usize, elements: &[ComplexMatrix]) -> Result<Self> {
        let vecs: Vec<CVector> = elements.iter().map(|e| e.vec()).collect();
        let m = ComplexMatrix::from_columns(dim * dim, &vecs);
        Self::from_columns(dim, range_basis(&m, RANGE_TOL)?)
    }

    fn from_columns(dim: usize, columns: ComplexMatrix) -> Result<Self> {
        let elements = (0..columns.cols()).map(|j| ComplexMatrix::unvec(&columns.column(j), dim, dim)).collect();
        Ok(Self { dim, elements, columns })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    /// Frobenius norm of the component of `x` orthogonal to the algebra.
    pub fn residual(&self, x: &ComplexMatrix) -> f64 {
        let v = x.vec();
        let coeff = self.columns.adjoint().apply(&v);
        let proj = self.columns.apply(&coeff);
        v.iter().zip(&proj).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &ComplexMatrix) -> bool {
        self.residual(x) <= ALGEBRA_TOL * x.frobenius().max(1.0)
    }

    pub fn random_element(&self, r: &mut SeededRng) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for e in &self.elements {
            out = &out + &e.scale(gaussian_c(r));
        }
        out
    }

    pub fn random_hermitian(&self, r: &mut SeededRng) -> ComplexMatrix {
        self.random_element(r).hermitian_part()
    }

    /// Checks unit, adjoint and product closure. Products are tested on generic random
    /// pairs, which fail with probability one when the span is not closed.
    pub fn check_closure(&self, seed: u64) -> Result<()> {
        let d = self.dim;
        if !self.contains(&ComplexMatrix::identity(d)) {
            return Err(Error::AlgebraStructure("span does not contain the identity".into()));
        }
        let mut r = rng(seed);
        for _ in 0..3 {
            let x = self.random_element(&mut r);
            let y = self.random_element(&mut r);
            let scale = x.frobenius() * y.frobenius();
            let res = self.residual(&(&x * &y)) / scale.max(1e-300);
            if res > ALGEBRA_TOL {
                return Err(Error::AlgebraStructure(format!("not closed under products: residual {res:.3e}")));
            }
            let res = self.residual(&x.adjoint()) / x.frobenius().max(1e-300);
            if res > ALGEBRA_TOL {
                return Err(Error::AlgebraStructure(format!("not closed under adjoints: residual {res:.3e}")));
            }
        }
        Ok(())
    }
}

/// Orthonormal basis of `im(ch*)` for an idempotent channel with full-rank unit image.
pub fn fixed_point_algebra(ch: &Superoperator) -> Result<AlgebraBasis> {
    let (ok, residual) = ch.is_idempotent()?;
    if !ok {
        return Err(Error::NotIdempotent { residual });
    }
    let d = ch.dim();
    let unit = ch.apply_matrix(&ComplexMatrix::identity(d));
    let rank = numerical_rank(&unit)?;
    if rank < d {
        return Err(Error::RankDeficientUnit { rank, dim: d });
    }
    let basis = AlgebraBasis::from_columns(d, range_basis(&ch.transfer().adjoint(), RANGE_TOL)?)?;
    basis.check_closure(DEFAULT_SEED)?;
    Ok(basis)
}

/// Unitary `U` and dims with `U† A U = ⊕_l B(C^{a_l}) ⊗ 1_{b_l}`.
#[derive(Clone, Debug)]
pub struct AlgebraBlocks {
    pub unitary: ComplexMatrix,
    pub dims: Vec<(usize, usize)>,
}

impl AlgebraBlocks {
    pub fn offsets(&self) -> Vec<usize> {
        let mut o = 0;
        self.dims
            .iter()
            .map(|&(a, b)| {
                let s = o;
                o += a * b;
                s
            })
            .collect()
    }

    /// Minimal central projection of block `l`.
    pub fn central_projection(&self, l: usize) -> ComplexMatrix {
        let o = self.offsets()[l];
        let (a, b) = self.dims[l];
        let v = self.unitary.submatrix(0, o, self.unitary.rows(), a * b);
        &v * &v.adjoint()
    }
}

/// Splits the eigenvalues (descending) into clusters of nearly equal values.
fn clusters(vals: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match out.last_mut() {
            Some(cl) if vals[*cl.last().unwrap()] - v <= tol => cl.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

fn normalized(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.norm_inf();
    if n > 0.0 { h.scale_real(1.0 / n) } else { h.clone() }
}

/// Columns of `v` spanning the subspace where the algebra acts as `x ⊗ 1_b`, rotated so that
/// column `j*b + beta` is `e_j ⊗ u_beta`. `h` and `y` are a Hermitian and a generic element
/// of the compressed algebra, written in the coordinates of `v`.
pub(crate) fn factor_subspace(v: &ComplexMatrix, a: usize, h: &ComplexMatrix, y: &ComplexMatrix) -> Result<Option<ComplexMatrix>> {
    let n = v.cols();
    if a == 0 || n % a != 0 {
        return Err(Error::AlgebraStructure(format!("block of dimension {n} is not a multiple of {a}")));
    }
    let b = n / a;
    let e = eig_hermitian(&normalized(h))?;
    let cl = clusters(&e.eigenvalues, COLLISION_TOL);
    if cl.len() != a || cl.iter().any(|c| c.len() != b) {
        return Ok(None);
    }
    let proj: Vec<ComplexMatrix> = cl.iter().map(|c| e.weighted_sum(c, |_| 1.0)).collect();
    let g: Vec<CVector> = cl[0].iter().map(|&i| e.vector(i)).collect();
    let mut cols = Vec::with_capacity(n);
    for pj in &proj {
        let pjy = pj * y;
        for gb in &g {
            let f = pjy.apply(gb);
            let norm = crate::matcore::vec_norm(&f);
            if norm < 1e-6 {
                return Ok(None);
            }
            cols.push(f.iter().map(|z| z / norm).collect::<CVector>());
        }
    }
    let w = ComplexMatrix::from_columns(n, &cols);
    if !w.is_unitary(1e-8) {
        return Ok(None);
    }
    Ok(Some(v * &w))
}

/// Orthonormal basis of the center, as matrices.
fn center(basis: &AlgebraBasis, r: &mut SeededRng) -> Result<Vec<ComplexMatrix>> {
    let d = basis.dim();
    let n = basis.len();
    let gens: Vec<ComplexMatrix> = (0..3).map(|_| basis.random_element(r)).collect();
    let mut m = ComplexMatrix::zeros(3 * d * d, n);
    for (j, bj) in basis.elements().iter().enumerate() {
        for (gi, g) in gens.iter().enumerate() {
            let comm = &(bj * g) - &(g * bj);
            for (t, z) in comm.vec().into_iter().enumerate() {
                m[(gi * d * d + t, j)] = z;
            }
        }
    }
    let ns = null_space(&m, 1e-9)?;
    Ok((0..ns.cols())
        .map(|k| {
            let coeff = ns.column(k);
            let mut z = ComplexMatrix::zeros(d, d);
            for (bj, cj) in basis.elements().iter().zip(coeff) {
                z = &z + &bj.scale(cj);
            }
            z
        })
        .collect())
}

fn first_significant(v: &ComplexMatrix) -> usize {
    (0..v.rows())
        .find(|&i| (0..v.cols()).map(|j| v[(i, j)].norm_sqr()).sum::<f64>() > 1e-8)
        .unwrap_or(v.rows())
}

/// Block decomposition of a unital *-subalgebra (seeded randomized splitting).
pub fn algebra_blocks(basis: &AlgebraBasis, seed: u64) -> Result<AlgebraBlocks> {
    let d = basis.dim();
    let mut r = rng(seed);
    let z = center(basis, &mut r)?;
    let nz = z.len();
    if nz == 0 {
        return Err(Error::AlgebraStructure("trivial center; the span is not a unital algebra".into()));
    }
    for _ in 0..MAX_RETRIES {
        let mut h = ComplexMatrix::zeros(d, d);
        for zi in &z {
            let w: f64 = rand::Rng::sample(&mut r, rand_distr::StandardNormal);
            h = &h + &zi.hermitian_part().scale_real(w);
        }
        let e = eig_hermitian(&normalized(&h))?;
        let cl = clusters(&e.eigenvalues, COLLISION_TOL);
        if cl.len() != nz {
            continue;
        }
        let hh = basis.random_hermitian(&mut r);
        let y = basis.random_element(&mut r);
        let mut pieces: Vec<(usize, usize, usize, ComplexMatrix)> = Vec::new();
        let mut ok = true;
        for c in &cl {
            let v = ComplexMatrix::from_columns(d, &c.iter().map(|&i| e.vector(i)).collect::<Vec<_>>());
            let compressed: Vec<CVector> = basis.elements().iter().map(|x| v.conjugate_adj(x).vec()).collect();
            let rank = range_basis(&ComplexMatrix::from_columns(c.len() * c.len(), &compressed), RANGE_TOL)?.cols();
            let a = (rank as f64).sqrt().round() as usize;
            if a * a != rank || c.len() % a != 0 {
                return Err(Error::AlgebraStructure(format!("central block has algebra dimension {rank}, not a square")));
            }
            match factor_subspace(&v, a, &v.conjugate_adj(&hh), &v.conjugate_adj(&y))? {
                Some(vw) => {
                    let key = first_significant(&v);
                    pieces.push((a, c.len() / a, key, vw));
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        pieces.sort_by_key(|p| (p.0, p.1, p.2));
        let mut cols = Vec::with_capacity(d);
        for p in &pieces {
            for j in 0..p.3.cols() {
                cols.push(p.3.column(j));
            }
        }
        let out = AlgebraBlocks {
            unitary: ComplexMatrix::from_columns(d, &cols),
            dims: pieces.iter().map(|p| (p.0, p.1)).collect(),
        };
        verify_blocks(basis, &out)?;
        return Ok(out);
    }
    Err(Error::AlgebraStructure(format!(
        "degenerate random spectra in {MAX_RETRIES} attempts; the algebra could not be split"
    )))
}

/// Residual of `U† x U` from the block form `⊕ x_l ⊗ 1`.
pub(crate) fn block_form_residual(x: &ComplexMatrix, u: &ComplexMatrix, dims: &[(usize, usize)]) -> f64 {
    let y = u.conjugate_adj(x);
    let mut target = ComplexMatrix::zeros(y.rows(), y.cols());
    let mut o = 0;
    for &(a, b) in dims {
        let blk = y.submatrix(o, o, a * b, a * b);
        let xa = partial_trace(&blk, &[a, b], &[0]).expect("block dims").scale_real(1.0 / b as f64);
        target.set_block(o, o, &tensor(&xa, &ComplexMatrix::identity(b)).expect("block dims"));
        o += a * b;
    }
    y.dist(&target)
}

fn verify_blocks(basis: &AlgebraBasis, blocks: &AlgebraBlocks) -> Result<()> {
    if !blocks.unitary.is_unitary(1e-8) {
        return Err(Error::AlgebraStructure("assembled basis change is not unitary".into()));
    }
    for x in basis.elements() {
        let res = block_form_residual(x, &blocks.unitary, &blocks.dims);
        if res > ALGEBRA_TOL {
            return Err(Error::AlgebraStructure(format!("element not block diagonal after rotation: {res:.3e}")));
        }
    }
    Ok(())
}

/// Largest relative distance of a basis element of `im(Q*)` from `im(P*)`.
pub fn inclusion_residual(p: &AlgebraBasis, q: &AlgebraBasis) -> f64 {
    q.elements().iter().map(|x| p.residual(x)).fold(0.0, f64::max)
}

/// `im(Q*) ⊆ im(P*)` within the algebra tolerance.
pub fn inclusion_holds(p: &AlgebraBasis, q: &AlgebraBasis) -> bool {
    p.dim() == q.dim() && inclusion_residual(p, q) <= ALGEBRA_TOL
}

/// Joint fixed state of `P` and `Q` with maximal rank, if one exists.
pub fn common_invariant_state(p: &Superoperator, q: &Superoperator) -> Result<Option<DensityMatrix>> {
    let d = p.dim();
    if q.dim() != d {
        return Err(Error::DimensionMismatch(format!("channels on C^{d} and C^{}", q.dim())));
    }
    let n = d * d;
    let mut m = ComplexMatrix::zeros(2 * n, n);
    let id = ComplexMatrix::identity(n);
    m.set_block(0, 0, &(p.transfer() - &id));
    m.set_block(n, 0, &(q.transfer() - &id));
    let ns = null_space(&m, 1e-10)?;
    if ns.cols() == 0 {
        return Ok(None);
    }
    // Both channels are positive and trace preserving, so the positive and negative parts of
    // a Hermitian fixed point are fixed as well; summing them gives a PSD fixed point of
    // maximal support.
    let mut acc = ComplexMatrix::zeros(d, d);
    for j in 0..ns.cols() {
        let x = ComplexMatrix::unvec(&ns.column(j), d, d);
        for h in [x.hermitian_part(), (&x.scale(C64::new(0.0, -1.0))).hermitian_part()] {
            if h.max_abs() < 1e-12 {
                continue;
            }
            let e = eig_hermitian(&h)?;
            acc = &acc + &e.apply_fn(|v| v.abs(), false)?;
        }
    }
    let t = acc.trace_re();
    if t <= 1e-12 {
        return Ok(None);
    }
    let sigma = acc.scale_real(1.0 / t);
    let rp = p.apply_matrix(&sigma).dist(&sigma);
    let rq = q.apply_matrix(&sigma).dist(&sigma);
    if rp.max(rq) > 1e-9 {
        return Ok(None);
    }
    Ok(Some(DensityMatrix::assume(sigma)))
}

/// Rank criterion for membership of a projection in the multiplicative domain of a unital map.
pub fn multiplicative_domain_member(ch: &dyn Channel, proj: &ComplexMatrix) -> Result<bool> {
    let d = ch.input_dim();
    super::check_square(proj, d, "projection")?;
    let unit = ch.apply_matrix(&ComplexMatrix::identity(d));
    if unit.dist(&ComplexMatrix::identity(ch.output_dim())) > 1e-9 {
        return Err(Error::InvalidChannel("multiplicative-domain test requires a unital map".into()));
    }
    if proj.dist(&proj.adjoint()) > 1e-9 || (proj * proj).dist(proj) > 1e-9 {
        return Err(Error::OutOfRange("input is not an orthogonal projection".into()));
    }
    let img = ch.apply_matrix(proj).to_hermitian()?;
    Ok(numerical_rank(&img)? == numerical_rank(proj)?)
}

/// Spectral projections of basis elements of `im(Q*)` that lie outside `im(P*)`, in basis order.
pub fn outside_projection(p: &AlgebraBasis, q: &AlgebraBasis) -> Result<Vec<ComplexMatrix>> {
    let mut out = Vec::new();
    let mut cands: Vec<ComplexMatrix> = Vec::new();
    for x in q.elements() {
        cands.push(x.hermitian_part());
        cands.push(x.scale(C64::new(0.0, -1.0)).hermitian_part());
    }
    for h in cands {
        if h.max_abs() < 1e-12 {
            continue;
        }
        let e = eig_hermitian(&normalized(&h))?;
        for cl in clusters(&e.eigenvalues, COLLISION_TOL) {
            let proj = e.weighted_sum(&cl, |_| 1.0);
            if p.residual(&proj) > 1e-6 {
                out.push(proj);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockchan::{Block, BlockIdempotent};
    use crate::matcore::c;

    fn superop(b: &BlockIdempotent) -> Superoperator {
        b.superoperator().unwrap()
    }

    fn omega(p: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(p).unwrap()
    }

    fn sorted(mut v: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
        v.sort();
        v
    }

    #[test]
    fn fixed_point_algebra_dimensions() {
        let id = Superoperator::identity(3);
        assert_eq!(fixed_point_algebra(&id).unwrap().len(), 9);
        let rep = superop(&BlockIdempotent::replacer(omega(&[0.3, 0.7])).unwrap());
        assert_eq!(fixed_point_algebra(&rep).unwrap().len(), 1);
        let dep = superop(&BlockIdempotent::dephasing(2).unwrap());
        let alg = fixed_point_algebra(&dep).unwrap();
        assert_eq!(alg.len(), 2);
        assert!(alg.contains(&ComplexMatrix::from_real_diag(&[1.0, 0.0])));
    }

    #[test]
    fn algebra_blocks_examples() {
        let full = fixed_point_algebra(&Superoperator::identity(3)).unwrap();
        let b = algebra_blocks(&full, 1).unwrap();
        assert_eq!(b.dims, vec![(3, 1)]);
        let unit = AlgebraBasis::span(3, &[ComplexMatrix::identity(3)]).unwrap();
        assert_eq!(algebra_blocks(&unit, 1).unwrap().dims, vec![(1, 3)]);
        let diag = AlgebraBasis::span(2, &[ComplexMatrix::from_real_diag(&[1.0, 0.0]), ComplexMatrix::from_real_diag(&[0.0, 1.0])]).unwrap();
        assert_eq!(algebra_blocks(&diag, 1).unwrap().dims, vec![(1, 1), (1, 1)]);
    }

    #[test]
    fn round_trip_random_block_idempotent() {
        let mut r = rng(11);
        let dims = vec![(2, 1), (1, 2), (2, 2)];
        let b = crate::random::random_block_idempotent(&dims, &mut r).unwrap();
        let s = superop(&b);
        assert!(s.is_idempotent().unwrap().0);
        let alg = fixed_point_algebra(&s).unwrap();
        assert_eq!(alg.len(), 4 + 1 + 4);
        let blocks = algebra_blocks(&alg, 5).unwrap();
        assert_eq!(sorted(blocks.dims.clone()), sorted(dims));
    }

    #[test]
    fn rejects_rank_deficient_unit_and_non_idempotent() {
        // Amplitude damping to |0> is idempotent only at full damping; its unit image is rank one.
        let k0 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let k1 = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let ad = Superoperator::from_kraus(&[k0, k1]).unwrap();
        assert!(matches!(fixed_point_algebra(&ad), Err(Error::RankDeficientUnit { .. })));
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let flip = Superoperator::from_kraus(&[x]).unwrap();
        assert!(matches!(fixed_point_algebra(&flip), Err(Error::NotIdempotent { .. })));
    }

    #[test]
    fn inclusion_examples() {
        let rep = fixed_point_algebra(&superop(&BlockIdempotent::replacer(omega(&[0.5, 0.5])).unwrap())).unwrap();
        let id = fixed_point_algebra(&Superoperator::identity(2)).unwrap();
        let dep = fixed_point_algebra(&superop(&BlockIdempotent::dephasing(2).unwrap())).unwrap();
        assert!(inclusion_holds(&id, &rep));
        assert!(!inclusion_holds(&rep, &id));
        assert!(inclusion_holds(&dep, &rep));
        assert!(!outside_projection(&dep, &id).unwrap().is_empty());
        assert!(outside_projection(&id, &dep).unwrap().is_empty());
    }

    #[test]
    fn common_invariant_examples() {
        let dep = superop(&BlockIdempotent::dephasing(3).unwrap());
        let s = common_invariant_state(&dep, &dep).unwrap().unwrap();
        assert!(s.is_full_rank().unwrap());
        let r1 = superop(&BlockIdempotent::replacer(omega(&[0.3, 0.7])).unwrap());
        let r2 = superop(&BlockIdempotent::replacer(omega(&[0.6, 0.4])).unwrap());
        assert!(common_invariant_state(&r1, &r2).unwrap().is_none());
        let s = common_invariant_state(&r1, &r1).unwrap().unwrap();
        assert!(s.matrix().dist(&ComplexMatrix::from_real_diag(&[0.3, 0.7])) < 1e-9);
        let unital = superop(
            &BlockIdempotent::standard(vec![
                Block::new(1, 2, DensityMatrix::maximally_mixed(2)).unwrap(),
                Block::new(1, 1, omega(&[1.0])).unwrap(),
            ])
            .unwrap(),
        );
        // Fixed states form the family diag(x/2, x/2, 1-x); any full-rank member is acceptable,
        // and the maximally mixed state is one of them.
        let s = common_invariant_state(&unital, &dep).unwrap().unwrap();
        assert!(s.is_full_rank().unwrap());
        let m = s.matrix();
        assert!((m[(0, 0)] - m[(1, 1)]).norm() < 1e-9 && m.dist(&dep.apply_matrix(m)) < 1e-9);
        let mixed = ComplexMatrix::identity(3).scale_real(1.0 / 3.0);
        assert!(unital.apply_matrix(&mixed).dist(&mixed) < 1e-12);
    }

    #[test]
    fn multiplicative_domain_examples() {
        let dep = BlockIdempotent::dephasing(2).unwrap();
        assert!(multiplicative_domain_member(&dep, &ComplexMatrix::identity(2)).unwrap());
        assert!(multiplicative_domain_member(&dep, &ComplexMatrix::from_real_diag(&[1.0, 0.0])).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexMatrix::projector(&[c(s, 0.0), c(s, 0.0)]);
        assert!(!multiplicative_domain_member(&dep, &plus).unwrap());
        assert!(multiplicative_domain_member(&dep, &ComplexMatrix::from_real_diag(&[2.0, 0.0])).is_err());
    }
}
