//! Single-letter formulas for idempotent channel pairs, their achieving inputs, index
//! constants and error exponents.

use crate::blockchan::{
    Channel, Superoperator, ThreeLayer, BlockIdempotent, fixed_point_algebra, inclusion_holds,
    numerical_rank, outside_projection,
};
use crate::error::{Error, Result};
use crate::matcore::{C64, CVector, ComplexMatrix, ky_fan};
use crate::states::{DensityMatrix, DivergenceReport, log2_sum_exp2, umegaki};
use serde::Serialize;

/// One summand of a closed form, on the linear scale.
#[derive(Clone, Debug, Serialize)]
pub struct BlockTerm {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub l: usize,
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FormulaValue {
    #[serde(with = "crate::extreal")]
    pub bits: f64,
    /// Maximizing outer block for pairs; absent for identity-vs-channel formulas.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kstar: Option<usize>,
    pub terms: Vec<BlockTerm>,
}

impl FormulaValue {
    /// `2^bits`, i.e. the sum of the maximizing row of terms.
    pub fn linear(&self) -> f64 {
        self.bits.exp2()
    }
}

fn reference_for(cb: bool, dim: usize) -> usize {
    if cb { dim } else { 1 }
}

/// Per-block `Tr_m(ω_l^{-1})` with `m = min(r d_A, d_B)`; with `r ≥ d_B` this is `Tr ω_l^{-1}`.
fn idq_terms(q: &BlockIdempotent, reference: usize) -> Result<Vec<BlockTerm>> {
    q.blocks()
        .iter()
        .enumerate()
        .map(|(l, b)| {
            let m = (reference * b.d_a).min(b.d_b);
            Ok(BlockTerm { k: None, l, d_a: b.d_a, d_b: b.d_b, value: ky_fan(&b.omega_inverse()?, m)? })
        })
        .collect()
}

pub fn idq_formula(q: &BlockIdempotent, cb: bool) -> Result<FormulaValue> {
    let terms = idq_terms(q, reference_for(cb, q.total_dim()))?;
    let total: f64 = terms.iter().map(|t| t.value).sum();
    Ok(FormulaValue { bits: total.log2(), kstar: None, terms })
}

/// `D(id ‖ Q)` in bits; the same value for every divergence between the min- and max-divergence.
pub fn d_idq(q: &BlockIdempotent) -> Result<f64> {
    Ok(idq_formula(q, false)?.bits)
}

pub fn d_idq_cb(q: &BlockIdempotent) -> Result<f64> {
    Ok(idq_formula(q, true)?.bits)
}

/// Schmidt vector on `A ⊗ B` (row-major, `A` first) over the `m` smallest eigenvalues of
/// `ω`, with weights proportional to the inverse eigenvalues. Returns the vector scaled by
/// `sqrt(weight)` and the Ky Fan mass.
fn schmidt_block(d_a: usize, omega: &DensityMatrix, weight: f64) -> Result<(CVector, f64)> {
    let d_b = omega.dim();
    let m = d_a.min(d_b);
    let e = omega.eig()?;
    // Lowest index first among ties: eigenvalues are descending, so walk from the end.
    let idx: Vec<usize> = (0..m).map(|i| d_b - 1 - i).collect();
    let inv: Vec<f64> = idx.iter().map(|&i| 1.0 / e.eigenvalues[i]).collect();
    let mass: f64 = inv.iter().sum();
    let mut v = vec![C64::ZERO; d_a * d_b];
    for (j, (&i, &w)) in idx.iter().zip(&inv).enumerate() {
        let amp = (weight * w / mass).sqrt();
        let f = e.vector(i);
        for be in 0..d_b {
            v[j * d_b + be] = f[be] * amp;
        }
    }
    Ok((v, mass))
}

/// Pure input attaining `d_idq` (or `d_idq_cb`, on `C^d ⊗ C^d` with the reference first).
pub fn optimal_input_idq(q: &BlockIdempotent, cb: bool) -> Result<CVector> {
    let ext = if cb { q.with_reference(q.total_dim())? } else { q.clone() };
    let masses: Vec<f64> = idq_terms(&ext, 1)?.iter().map(|t| t.value).collect();
    let total: f64 = masses.iter().sum();
    let mut frame = vec![C64::ZERO; ext.total_dim()];
    for ((b, &o), &m) in ext.blocks().iter().zip(ext.offsets()).zip(&masses) {
        let (v, _) = schmidt_block(b.d_a, &b.omega, m / total)?;
        frame[o..o + v.len()].copy_from_slice(&v);
    }
    Ok(ext.basis_change().apply(&frame))
}

fn pq_row(t: &ThreeLayer, k: usize, reference: usize) -> Result<Vec<BlockTerm>> {
    let common = t.common().ok_or_else(|| Error::InvalidState("pair has no common invariant state".into()))?;
    let mut out = Vec::new();
    for l in 0..t.l_count() {
        let b = t.b()[k][l];
        if b == 0 {
            continue;
        }
        let tau = common.tau[k][l].as_ref().ok_or_else(|| Error::InvalidState(format!("tau_({k},{l}) missing")))?;
        let m = (reference * t.a()[l]).min(b);
        let inv = tau.eig()?.apply_fn(|x| 1.0 / x, true)?;
        out.push(BlockTerm { k: Some(k), l, d_a: t.a()[l], d_b: b, value: ky_fan(&inv, m)? / common.p[k][l] });
    }
    Ok(out)
}

/// `max_k log Σ_l Tr_m(τ_{kl}^{-1}) / p_{kl}` over nonempty blocks, with the maximizing `k`.
pub fn pq_formula(t: &ThreeLayer, cb: bool) -> Result<FormulaValue> {
    let r = reference_for(cb, t.total_dim());
    let mut best: Option<(f64, usize, Vec<BlockTerm>)> = None;
    for k in 0..t.k_count() {
        let row = pq_row(t, k, r)?;
        let s: f64 = row.iter().map(|x| x.value).sum();
        if best.as_ref().is_none_or(|b| s > b.0) {
            best = Some((s, k, row));
        }
    }
    let (s, k, terms) = best.expect("K > 0");
    Ok(FormulaValue { bits: s.log2(), kstar: Some(k), terms })
}

pub fn d_pq_common(t: &ThreeLayer) -> Result<(f64, usize)> {
    let f = pq_formula(t, false)?;
    Ok((f.bits, f.kstar.unwrap()))
}

pub fn d_pq_common_cb(t: &ThreeLayer) -> Result<(f64, usize)> {
    let f = pq_formula(t, true)?;
    Ok((f.bits, f.kstar.unwrap()))
}

/// `ψ* ⊗ δ_{k*}` in block `k*`; for `cb` the state lives on `C^d ⊗ C^d`, reference first.
pub fn optimal_input_pq(t: &ThreeLayer, cb: bool) -> Result<DensityMatrix> {
    let ext = if cb { t.with_reference(t.total_dim())? } else { t.clone() };
    let f = pq_formula(&ext, false)?;
    let k = f.kstar.unwrap();
    let total: f64 = f.terms.iter().map(|x| x.value).sum();
    let common = ext.common().expect("checked by pq_formula");
    // Amplitudes of ψ* indexed by (l, α, β).
    let mut amps: Vec<(usize, usize, usize, C64)> = Vec::new();
    for term in &f.terms {
        let l = term.l;
        let tau = common.tau[k][l].as_ref().unwrap();
        let (v, _) = schmidt_block(ext.a()[l], tau, term.value / total)?;
        let b = term.d_b;
        for (i, z) in v.into_iter().enumerate() {
            if z != C64::ZERO {
                amps.push((l, i / b, i % b, z));
            }
        }
    }
    let delta = ext.delta()[k].matrix();
    let n = ext.total_dim();
    let mut rho = ComplexMatrix::zeros(n, n);
    for &(l1, a1, b1, z1) in &amps {
        for &(l2, a2, b2, z2) in &amps {
            for g1 in 0..ext.c()[k] {
                for g2 in 0..ext.c()[k] {
                    let (i, j) = (ext.frame_index(k, l1, a1, b1, g1), ext.frame_index(k, l2, a2, b2, g2));
                    rho[(i, j)] = z1 * z2.conj() * delta[(g1, g2)];
                }
            }
        }
    }
    Ok(DensityMatrix::assume(ext.basis_change().conjugate(&rho)))
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub state: DensityMatrix,
    pub rank_p: usize,
    pub rank_q: usize,
    /// Umegaki divergence `D(P(ρ) ‖ Q(ρ))`, infinite by construction.
    #[serde(with = "crate::extreal")]
    pub umegaki_bits: f64,
}

/// State with `rank P(ρ) > rank Q(ρ)` when `im(Q*) ⊄ im(P*)`; `None` when the inclusion holds.
pub fn infinite_divergence_witness(p: &dyn Channel, q: &dyn Channel) -> Result<Option<Witness>> {
    let sp = Superoperator::from_channel(p)?;
    let sq = Superoperator::from_channel(q)?;
    let ap = fixed_point_algebra(&sp)?;
    let aq = fixed_point_algebra(&sq)?;
    if inclusion_holds(&ap, &aq) {
        return Ok(None);
    }
    for proj in outside_projection(&ap, &aq)? {
        let tr = proj.trace_re();
        let state = DensityMatrix::assume(proj.scale_real(1.0 / tr));
        let pr = DensityMatrix::assume(p.apply_matrix(state.matrix()));
        let qr = DensityMatrix::assume(q.apply_matrix(state.matrix()));
        let (rank_p, rank_q) = (numerical_rank(pr.matrix())?, numerical_rank(qr.matrix())?);
        if rank_p > rank_q {
            let umegaki_bits = umegaki(&pr, &qr)?;
            return Ok(Some(Witness { state, rank_p, rank_q, umegaki_bits }));
        }
    }
    Err(Error::AlgebraStructure("inclusion fails but no spectral projection separates the algebras".into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperBound {
    #[serde(with = "crate::extreal")]
    pub bits: f64,
    pub kstar: usize,
    /// Sufficient condition for equality: `ω_l = ⊕_k p_{kl} τ_{kl} ⊗ ν_k` with shared `ν_k`.
    pub exact: bool,
}

/// `max_k log Σ_l 2^{D(k,l)}` over nonempty blocks. `dkl[k][l]` must be present exactly
/// where `b_{kl} > 0`.
pub fn general_upper_bound(t: &ThreeLayer, alpha: f64, dkl: &[Vec<Option<f64>>]) -> Result<UpperBound> {
    if !(alpha > 1.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} must exceed 1")));
    }
    if dkl.len() != t.k_count() || dkl.iter().any(|r| r.len() != t.l_count()) {
        return Err(Error::DimensionMismatch("per-block table must be K x L".into()));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 0..t.k_count() {
        let mut vals = Vec::new();
        for l in 0..t.l_count() {
            if t.b()[k][l] == 0 {
                continue;
            }
            vals.push(dkl[k][l].ok_or_else(|| Error::InvalidState(format!("missing D({k},{l})")))?);
        }
        let s = log2_sum_exp2(vals);
        if s > best.0 {
            best = (s, k);
        }
    }
    Ok(UpperBound { bits: best.0, kstar: best.1, exact: t.shared_nu().is_some() })
}

/// `(C, C_cb)` on the linear scale.
pub fn pimsner_popa(e: &BlockIdempotent) -> Result<(f64, f64)> {
    let plain: f64 = idq_terms(e, 1)?.iter().map(|t| t.value).sum();
    let cb: f64 = idq_terms(e, e.total_dim())?.iter().map(|t| t.value).sum();
    Ok((plain, cb))
}

/// Index of a nested pair on the linear scale. With `trace_preserving`, `δ_k` and `ω_l`
/// must be maximally mixed.
pub fn nested_index(t: &ThreeLayer, trace_preserving: bool) -> Result<(f64, f64)> {
    if trace_preserving {
        let mixed = |s: &DensityMatrix| s.matrix().dist(&ComplexMatrix::identity(s.dim()).scale_real(1.0 / s.dim() as f64));
        if t.delta().iter().chain(t.omega()).any(|s| mixed(s) > 1e-9) {
            return Err(Error::AlgebraStructure("trace-preserving pair requires maximally mixed delta and omega".into()));
        }
    }
    Ok((pq_formula(t, false)?.linear(), pq_formula(t, true)?.linear()))
}

/// Dimension-only index of the trace-preserving nested pair:
/// `max_k Σ_l m_{kl} e_l / c_k` with `m = min(a_l, b_{kl})` (plain) or `m = b_{kl}` (cb).
pub fn nested_index_dims(a: &[usize], b: &[Vec<usize>], cdims: &[usize]) -> (f64, f64) {
    let e: Vec<usize> = (0..a.len()).map(|l| (0..cdims.len()).map(|k| b[k][l] * cdims[k]).sum()).collect();
    let mut best = (0.0f64, 0.0f64);
    for k in 0..cdims.len() {
        let mut s = (0.0, 0.0);
        for l in 0..a.len() {
            if b[k][l] == 0 {
                continue;
            }
            let scale = e[l] as f64 / cdims[k] as f64;
            s.0 += a[l].min(b[k][l]) as f64 * scale;
            s.1 += b[k][l] as f64 * scale;
        }
        best = (best.0.max(s.0), best.1.max(s.1));
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentReport {
    #[serde(with = "crate::extreal")]
    pub stein_bits: f64,
    #[serde(with = "crate::extreal")]
    pub chernoff_bits: f64,
    #[serde(with = "crate::extreal")]
    pub dcb_bits: f64,
    pub additive: bool,
    /// False when the value is only an upper bound.
    pub exact: bool,
    pub perfect_discrimination: bool,
}

impl ExponentReport {
    /// `max(0, r − D^cb)`; zero for every rate when `D^cb = +∞`.
    pub fn strong_converse(&self, r: f64) -> f64 {
        if self.dcb_bits.is_infinite() { 0.0 } else { (r - self.dcb_bits).max(0.0) }
    }

    pub fn strong_converse_table(&self, rates: &[f64]) -> Vec<(f64, f64)> {
        rates.iter().map(|&r| (r, self.strong_converse(r))).collect()
    }
}

pub fn exponents(dcb_bits: f64, exact: bool) -> ExponentReport {
    ExponentReport {
        stein_bits: dcb_bits,
        chernoff_bits: dcb_bits,
        dcb_bits,
        additive: exact,
        exact,
        perfect_discrimination: dcb_bits == f64::INFINITY,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuxKind {
    Softmax,
    Harmonic,
    Hoelder,
}

/// Closed-form optima over the simplex with their maximizers (or minimizer, for `Harmonic`).
pub fn appendix_d_optima(kind: AuxKind, cs: &[f64], alpha: Option<f64>) -> Result<(f64, Vec<f64>)> {
    if cs.is_empty() || cs.iter().any(|x| !x.is_finite()) {
        return Err(Error::OutOfRange("coefficients must be finite and non-empty".into()));
    }
    let normalize = |w: Vec<f64>| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    match kind {
        AuxKind::Softmax => {
            let v = log2_sum_exp2(cs.iter().copied());
            Ok((v, cs.iter().map(|x| (x - v).exp2()).collect()))
        }
        AuxKind::Harmonic => {
            if cs.iter().any(|&x| x <= 0.0) {
                return Err(Error::OutOfRange("harmonic optimum requires positive coefficients".into()));
            }
            let s: f64 = cs.iter().map(|x| 1.0 / x).sum();
            Ok((1.0 / s, normalize(cs.iter().map(|x| 1.0 / x).collect())))
        }
        AuxKind::Hoelder => {
            let a = alpha.ok_or_else(|| Error::OutOfRange("hoelder optimum requires alpha".into()))?;
            if !(a > 1.0) {
                return Err(Error::OutOfRange(format!("alpha = {a} must exceed 1")));
            }
            if cs.iter().any(|&x| x < 0.0) || cs.iter().all(|&x| x == 0.0) {
                return Err(Error::OutOfRange("hoelder optimum requires non-negative, non-zero coefficients".into()));
            }
            Ok((cs.iter().sum::<f64>().log2(), normalize(cs.to_vec())))
        }
    }
}

/// Formula output as serialized by the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct FormulaReport {
    #[serde(flatten)]
    pub divergence: DivergenceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kstar: Option<usize>,
    pub blocks: Vec<BlockTerm>,
    pub exact: bool,
    pub additive: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockchan::{Block, Extended, IdentityChannel, apply_op};
    use crate::random::{random_block_idempotent, random_three_layer, rng};
    use crate::states::dmin;

    fn omega(p: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(p).unwrap()
    }

    fn dmin_idq(q: &BlockIdempotent, psi: &[C64], cb: bool) -> f64 {
        let rho = DensityMatrix::pure(psi);
        let out = if cb {
            apply_op(&Extended::new(q, q.total_dim()), rho.matrix()).unwrap()
        } else {
            apply_op(q, rho.matrix()).unwrap()
        };
        dmin(&rho, &DensityMatrix::assume(out)).unwrap()
    }

    #[test]
    fn idq_examples() {
        assert_eq!(d_idq(&BlockIdempotent::identity(3).unwrap()).unwrap(), 0.0);
        let r = BlockIdempotent::replacer(DensityMatrix::maximally_mixed(3)).unwrap();
        assert!((d_idq(&r).unwrap() - 3f64.log2()).abs() < 1e-12);
        assert!((d_idq_cb(&r).unwrap() - 9f64.log2()).abs() < 1e-12);
        let dep = BlockIdempotent::dephasing(2).unwrap();
        assert!((d_idq(&dep).unwrap() - 1.0).abs() < 1e-12);
        assert!((d_idq_cb(&dep).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_input_examples() {
        // With dA = 2 both eigenvalues of ω⁻¹ = (4, 4/3) enter: log2(16/3).
        let w = omega(&[0.25, 0.75]);
        let q = BlockIdempotent::standard(vec![Block::new(2, 2, w.clone()).unwrap()]).unwrap();
        let psi = optimal_input_idq(&q, false).unwrap();
        assert!((dmin_idq(&q, &psi, false) - (16.0f64 / 3.0).log2()).abs() < 1e-9);
        // Schmidt weights are proportional to (4, 4/3).
        let ra = (psi[0].norm_sqr(), psi[3].norm_sqr());
        assert!((ra.0 / ra.1 - 3.0).abs() < 1e-9);
        // The plain replacer only uses the top eigenvalue; the cb version restores both.
        let r = BlockIdempotent::replacer(w).unwrap();
        assert!((d_idq(&r).unwrap() - 2.0).abs() < 1e-12);
        let psi = optimal_input_idq(&r, true).unwrap();
        assert!((dmin_idq(&r, &psi, true) - (16.0f64 / 3.0).log2()).abs() < 1e-9);
        let dep = BlockIdempotent::dephasing(2).unwrap();
        let psi = optimal_input_idq(&dep, false).unwrap();
        assert!((psi[0].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((dmin_idq(&dep, &psi, false) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn optimal_input_attains_formula_on_random_blocks() {
        let mut r = rng(5);
        for dims in [vec![(2, 3), (1, 2)], vec![(3, 2)], vec![(1, 1), (2, 2), (2, 1)]] {
            let q = random_block_idempotent(&dims, &mut r).unwrap();
            for cb in [false, true] {
                let f = idq_formula(&q, cb).unwrap().bits;
                let psi = optimal_input_idq(&q, cb).unwrap();
                assert!((dmin_idq(&q, &psi, cb) - f).abs() < 1e-9, "{dims:?} cb={cb}");
            }
        }
    }

    #[test]
    fn pq_examples() {
        let mut r = rng(2);
        let q = random_block_idempotent(&[(2, 2), (1, 2)], &mut r).unwrap();
        let t = crate::blockchan::three_layer_decompose(&q, &q, 1).unwrap();
        assert!(d_pq_common(&t).unwrap().0.abs() < 1e-9);
        // P = id reduces to the identity-vs-channel formula.
        let id = BlockIdempotent::identity(q.total_dim()).unwrap();
        let t = crate::blockchan::three_layer_decompose(&id, &q, 1).unwrap();
        assert!((d_pq_common(&t).unwrap().0 - d_idq(&q).unwrap()).abs() < 1e-9);
        assert!((d_pq_common_cb(&t).unwrap().0 - d_idq_cb(&q).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn optimal_input_pq_attains_formula() {
        let mut r = rng(13);
        for _ in 0..3 {
            let t = random_three_layer(2, 2, 2, &mut r).unwrap();
            let (p, q) = (t.p_channel().unwrap(), t.q_channel().unwrap());
            for cb in [false, true] {
                let f = pq_formula(&t, cb).unwrap().bits;
                let rho = optimal_input_pq(&t, cb).unwrap();
                let (pr, qr) = if cb {
                    let d = t.total_dim();
                    (Extended::new(&p, d).apply_matrix(rho.matrix()), Extended::new(&q, d).apply_matrix(rho.matrix()))
                } else {
                    (p.apply_matrix(rho.matrix()), q.apply_matrix(rho.matrix()))
                };
                let v = dmin(&DensityMatrix::assume(pr), &DensityMatrix::assume(qr)).unwrap();
                assert!((v - f).abs() < 1e-9, "cb={cb}: {v} vs {f}");
            }
        }
    }

    #[test]
    fn witness_examples() {
        let rep = BlockIdempotent::replacer(DensityMatrix::maximally_mixed(2)).unwrap();
        let id = IdentityChannel { dim: 2 };
        assert!(infinite_divergence_witness(&rep, &id).unwrap().is_some());
        assert!(infinite_divergence_witness(&id, &rep).unwrap().is_none());
        let dep = BlockIdempotent::dephasing(2).unwrap();
        let w = infinite_divergence_witness(&dep, &id).unwrap().unwrap();
        assert_eq!((w.rank_p, w.rank_q), (2, 1));
        assert!(w.umegaki_bits.is_infinite());
    }

    #[test]
    fn pimsner_popa_examples() {
        let e = BlockIdempotent::standard(vec![
            Block::new(2, 3, DensityMatrix::maximally_mixed(3)).unwrap(),
            Block::new(1, 2, DensityMatrix::maximally_mixed(2)).unwrap(),
        ])
        .unwrap();
        let (cc, ccb) = pimsner_popa(&e).unwrap();
        assert!((cc - (2.0 * 3.0 + 1.0 * 2.0)).abs() < 1e-12);
        assert!((ccb - (9.0 + 4.0)).abs() < 1e-12);
        assert_eq!(pimsner_popa(&BlockIdempotent::identity(3).unwrap()).unwrap(), (1.0, 1.0));
        let (cc, ccb) = pimsner_popa(&BlockIdempotent::dephasing(4).unwrap()).unwrap();
        assert!((cc - 4.0).abs() < 1e-12 && (ccb - 4.0).abs() < 1e-12);
    }

    #[test]
    fn nested_index_examples() {
        // Diagonal C^2 inside M_2: one outer block of dimension 2 with trivial C.
        let t = ThreeLayer::from_common(
            vec![1, 1],
            vec![vec![1, 1]],
            vec![1],
            ComplexMatrix::identity(2),
            vec![omega(&[1.0])],
            vec![vec![1.0, 1.0]],
            vec![vec![Some(omega(&[1.0])), Some(omega(&[1.0]))]],
        )
        .unwrap();
        let (cc, _) = nested_index(&t, true).unwrap();
        assert!((cc - 2.0).abs() < 1e-12);
        assert_eq!(nested_index_dims(&[1, 1], &[vec![1, 1]], &[1]).0, 2.0);
        let same = BlockIdempotent::dephasing(3).unwrap();
        let t = crate::blockchan::three_layer_decompose(&same, &same, 0).unwrap();
        let (cc, ccb) = nested_index(&t, false).unwrap();
        assert!((cc - 1.0).abs() < 1e-9 && (ccb - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponent_examples() {
        let e = exponents(1.0, true);
        assert_eq!(e.strong_converse(1.5), 0.5);
        assert_eq!(e.strong_converse(0.5), 0.0);
        let e = exponents(f64::INFINITY, true);
        assert!(e.stein_bits.is_infinite() && e.chernoff_bits.is_infinite() && e.perfect_discrimination);
        let e = exponents(0.0, true);
        assert_eq!((e.stein_bits, e.chernoff_bits, e.strong_converse(2.0)), (0.0, 0.0, 2.0));
    }

    #[test]
    fn appendix_d_examples() {
        let (v, mu) = appendix_d_optima(AuxKind::Softmax, &[0.0, 0.0], None).unwrap();
        assert!((v - 1.0).abs() < 1e-15 && (mu[0] - 0.5).abs() < 1e-15);
        let (v, mu) = appendix_d_optima(AuxKind::Harmonic, &[1.0, 1.0], None).unwrap();
        assert!((v - 0.5).abs() < 1e-15 && (mu[1] - 0.5).abs() < 1e-15);
        let (v, p) = appendix_d_optima(AuxKind::Hoelder, &[3.0, 3.0], Some(2.0)).unwrap();
        assert!((v - 6f64.log2()).abs() < 1e-15 && (p[0] - 0.5).abs() < 1e-15);
        assert!(appendix_d_optima(AuxKind::Harmonic, &[0.0, 1.0], None).is_err());
        assert!(appendix_d_optima(AuxKind::Hoelder, &[1.0], Some(1.0)).is_err());
    }
}
