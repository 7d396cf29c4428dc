//! Routing of a channel pair to the applicable closed form.

use crate::blockchan::{
    AnyChannel, BlockIdempotent, Channel, DEFAULT_SEED, Restricted, Superoperator, ThreeLayer, fixed_point_algebra,
    inclusion_holds, three_layer_decompose,
};
use crate::counterexample::block_columns;
use crate::closedform::{
    BlockTerm, ExponentReport, FormulaReport, FormulaValue, UpperBound, Witness, exponents, general_upper_bound,
    idq_formula, infinite_divergence_witness, optimal_input_idq, optimal_input_pq, pq_formula,
};
use crate::error::{Error, Result};
use crate::matcore::{C64, CVector, ComplexMatrix};
use crate::oracle::{OptimizerConfig, maximize_channel_divergence_seeded};
use crate::states::{DensityMatrix, Divergence, DivergenceReport};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    IdentityVsChannel,
    CommonInvariant,
    GeneralBound,
    InclusionFails,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairAnalysis {
    pub route: Route,
    pub plain: FormulaReport,
    pub cb: FormulaReport,
    pub exponents: ExponentReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Oracle value of the plain divergence, reported next to an upper bound.
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::extreal::opt")]
    pub oracle_bits: Option<f64>,
}

/// Structured form of an idempotent channel, with the underlying error when it has none.
pub fn require_block(ch: &AnyChannel) -> Result<BlockIdempotent> {
    match ch {
        AnyChannel::Block(b) => Ok(b.clone()),
        AnyChannel::Dense(s) => {
            let (idem, residual) = s.is_idempotent()?;
            if !idem {
                return Err(Error::NotIdempotent { residual });
            }
            BlockIdempotent::from_superoperator(s, DEFAULT_SEED)
        }
    }
}

pub fn is_identity(ch: &dyn Channel) -> Result<bool> {
    let s = Superoperator::from_channel(ch)?;
    Ok(s.transfer().dist(&ComplexMatrix::identity(s.dim() * s.dim())) <= 1e-9)
}

fn report(name: &str, alpha: Option<f64>, f: &FormulaValue, exact: bool, additive: bool) -> FormulaReport {
    FormulaReport {
        divergence: DivergenceReport::new(name, alpha, f.bits),
        kstar: f.kstar,
        blocks: f.terms.clone(),
        exact,
        additive,
    }
}

fn infinite_report(name: &str) -> FormulaReport {
    FormulaReport { divergence: DivergenceReport::new(name, None, f64::INFINITY), kstar: None, blocks: vec![], exact: true, additive: true }
}

/// One normalized seed per outer block: equal superposition of the first vector of every
/// nonempty `(k, l)` block, tensored with the first vector of `C_k`.
pub fn block_uniform_seeds(t: &ThreeLayer) -> Vec<CVector> {
    (0..t.k_count())
        .map(|k| {
            let mut v = vec![C64::ZERO; t.total_dim()];
            let ls: Vec<usize> = (0..t.l_count()).filter(|&l| t.b()[k][l] > 0).collect();
            let amp = 1.0 / (ls.len() as f64).sqrt();
            for l in ls {
                v[t.frame_index(k, l, 0, 0, 0)] = C64::new(amp, 0.0);
            }
            t.basis_change().apply(&v)
        })
        .collect()
}

/// Oracle values of the sandwiched divergence of `P` and `Q` restricted to each nonempty block.
pub fn block_divergences(t: &ThreeLayer, alpha: f64, cb: bool, cfg: &OptimizerConfig) -> Result<Vec<Vec<Option<f64>>>> {
    let (p, q) = (t.p_channel()?, t.q_channel()?);
    let mut out = vec![vec![None; t.l_count()]; t.k_count()];
    for k in 0..t.k_count() {
        for l in 0..t.l_count() {
            if t.b()[k][l] == 0 {
                continue;
            }
            let cols = block_columns(t, k, l);
            // Both channels map the span of the block's columns into itself.
            let rp = Restricted::to_columns(&p, t.basis_change(), &cols)?.compressed()?;
            let rq = Restricted::to_columns(&q, t.basis_change(), &cols)?.compressed()?;
            for ch in [&rp, &rq] {
                let lost = (ch.apply_matrix(&ComplexMatrix::identity(cols.len())).trace_re() - cols.len() as f64).abs();
                if lost > 1e-9 {
                    return Err(Error::AlgebraStructure(format!("block ({k}, {l}) leaks {lost:.3e} of its trace under restriction")));
                }
            }
            let r = if cb { cols.len() } else { 1 };
            let o = maximize_channel_divergence_seeded(Divergence::Sandwiched(alpha), &rp, &rq, r, &[], cfg)?;
            out[k][l] = Some(o.value_bits);
        }
    }
    Ok(out)
}

fn bound_report(name: &str, alpha: f64, b: &UpperBound, t: &ThreeLayer, dkl: &[Vec<Option<f64>>]) -> FormulaReport {
    let blocks = (0..t.l_count())
        .filter_map(|l| {
            dkl[b.kstar][l].map(|v| BlockTerm { k: Some(b.kstar), l, d_a: t.a()[l], d_b: t.b()[b.kstar][l], value: v.exp2() })
        })
        .collect();
    FormulaReport {
        divergence: DivergenceReport::new(name, Some(alpha), b.bits),
        kstar: Some(b.kstar),
        blocks,
        exact: b.exact,
        additive: true,
    }
}

/// Closed form (or bound) for the pair, both plain and stabilized.
pub fn analyze_pair(p: &AnyChannel, q: &AnyChannel, alpha: f64, cfg: &OptimizerConfig) -> Result<PairAnalysis> {
    let (pb, qb) = (require_block(p)?, require_block(q)?);
    if pb.total_dim() != qb.total_dim() {
        return Err(Error::DimensionMismatch(format!("channels on C^{} and C^{}", pb.total_dim(), qb.total_dim())));
    }
    if is_identity(&pb)? {
        let (plain, cb) = (idq_formula(&qb, false)?, idq_formula(&qb, true)?);
        let mut pr = report("d_idq", None, &plain, true, true);
        pr.divergence.achieving_state = Some(DensityMatrix::pure(&optimal_input_idq(&qb, false)?).into_matrix());
        return Ok(PairAnalysis {
            route: Route::IdentityVsChannel,
            exponents: exponents(cb.bits, true),
            plain: pr,
            cb: report("d_idq_cb", None, &cb, true, true),
            witness: None,
            oracle_bits: None,
        });
    }
    let (ap, aq) = (fixed_point_algebra(&pb.superoperator()?)?, fixed_point_algebra(&qb.superoperator()?)?);
    if !inclusion_holds(&ap, &aq) {
        let witness = infinite_divergence_witness(&pb, &qb)?;
        return Ok(PairAnalysis {
            route: Route::InclusionFails,
            plain: infinite_report("divergence"),
            cb: infinite_report("divergence_cb"),
            exponents: exponents(f64::INFINITY, true),
            witness,
            oracle_bits: None,
        });
    }
    let t = three_layer_decompose(&pb, &qb, DEFAULT_SEED)?;
    if t.common_invariant() {
        let (plain, cb) = (pq_formula(&t, false)?, pq_formula(&t, true)?);
        let mut pr = report("d_pq_common", None, &plain, true, true);
        pr.divergence.achieving_state = Some(optimal_input_pq(&t, false)?.into_matrix());
        return Ok(PairAnalysis {
            route: Route::CommonInvariant,
            exponents: exponents(cb.bits, true),
            plain: pr,
            cb: report("d_pq_common_cb", None, &cb, true, true),
            witness: None,
            oracle_bits: None,
        });
    }
    if !(alpha > 1.0) {
        return Err(Error::OutOfRange(format!("the general bound needs alpha > 1, got {alpha}")));
    }
    let dkl = block_divergences(&t, alpha, false, cfg)?;
    let dkl_cb = block_divergences(&t, alpha, true, cfg)?;
    let (b, bcb) = (general_upper_bound(&t, alpha, &dkl)?, general_upper_bound(&t, alpha, &dkl_cb)?);
    let (pc, qc) = (t.p_channel()?, t.q_channel()?);
    let o = maximize_channel_divergence_seeded(Divergence::Sandwiched(alpha), &pc, &qc, 1, &block_uniform_seeds(&t), cfg)?;
    let mut plain = bound_report("sandwiched_bound", alpha, &b, &t, &dkl);
    plain.divergence.oracle_bits = Some(o.value_bits);
    plain.divergence.achieving_state = Some(o.state.into_matrix());
    Ok(PairAnalysis {
        route: Route::GeneralBound,
        plain,
        cb: bound_report("sandwiched_cb_bound", alpha, &bcb, &t, &dkl_cb),
        exponents: exponents(bcb.bits, bcb.exact),
        witness: None,
        oracle_bits: Some(o.value_bits),
    })
}
