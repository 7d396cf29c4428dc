//! Two-block pair without a common invariant state, for which the per-block bound on the
//! sandwiched divergence is strict.
//!
//! The analytic route maximizes the closed expression for `2^{D̃_2}` over the input
//! parameters `(p, q_1, q_2)`; the numeric route evaluates the sandwiched divergence on the
//! actual channel outputs, and the oracle route searches over all pure inputs.

use crate::blockchan::{Channel, Restricted, ThreeLayer};
use crate::constants::constants;
use crate::error::Result;
use crate::matcore::{C64, CVector, ComplexMatrix, c};
use crate::oracle::{OptimizerConfig, maximize_channel_divergence_seeded};
use crate::states::{DensityMatrix, Divergence, golden_max, sandwiched};
use serde::Serialize;

const SEARCH_TOL: f64 = 1e-12;

pub fn pair() -> Result<ThreeLayer> {
    let k = &constants().counterexample;
    let delta = k.delta.iter().map(|d| DensityMatrix::diagonal(d)).collect::<Result<Vec<_>>>()?;
    let omega = k.omega.iter().map(|w| DensityMatrix::diagonal(w)).collect::<Result<Vec<_>>>()?;
    let total: usize = (0..k.c.len()).map(|i| (0..k.a.len()).map(|j| k.a[j] * k.b[i][j] * k.c[i]).sum::<usize>()).sum();
    ThreeLayer::new(k.a.clone(), k.b.clone(), k.c.clone(), ComplexMatrix::identity(total), delta, omega)
}

/// `q + (1 − q)/√3`: overlap factor of `ω_l^{-1/2}` on a unit vector with `|⟨0|v⟩|² = q`.
fn t(q: f64) -> f64 {
    q + (1.0 - q) / 3f64.sqrt()
}

/// Maximum of `f` on `[0, 1]`, endpoints included.
fn max_unit(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (x, v) = golden_max(&f, 0.0, 1.0, SEARCH_TOL);
    [(0.0, f(0.0)), (1.0, f(1.0))].into_iter().fold((x, v), |best, cand| if cand.1 > best.1 { cand } else { best })
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockOptimum {
    pub l: usize,
    pub q: f64,
    /// `2^{D̃_2(1,l)}`.
    pub linear: f64,
    pub bits: f64,
}

/// Per-block optimum of `2 t(q)² + 1`.
pub fn block_optima() -> Vec<BlockOptimum> {
    (0..2)
        .map(|l| {
            let (q, v) = max_unit(|q| 2.0 * t(q).powi(2) + 1.0);
            BlockOptimum { l, q, linear: v, bits: v.log2() }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct PairOptimum {
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    pub linear: f64,
    pub bits: f64,
}

/// `max (√(2p) t(q₁) + √(1−p))² + (√p + √(2(1−p)) t(q₂))²`; the `q` searches separate for fixed `p`.
pub fn pair_optimum() -> PairOptimum {
    let inner = |p: f64| {
        let (q1, v1) = max_unit(|q| ((2.0 * p).sqrt() * t(q) + (1.0 - p).sqrt()).powi(2));
        let (q2, v2) = max_unit(|q| (p.sqrt() + (2.0 * (1.0 - p)).sqrt() * t(q)).powi(2));
        (q1, q2, v1 + v2)
    };
    let (p, _) = max_unit(|p| inner(p).2);
    let (q1, q2, linear) = inner(p);
    PairOptimum { p, q1, q2, linear, bits: linear.log2() }
}

/// `ψ ⊗ |0⟩_C` with `ψ = √p ψ₁ ⊕ √(1−p) ψ₂` and `ψ_l = √q_l |0⟩ + √(1−q_l) |1⟩`.
pub fn input_vector(t3: &ThreeLayer, p: f64, q: [f64; 2]) -> CVector {
    let mut v = vec![C64::ZERO; t3.total_dim()];
    for (l, (w, ql)) in [(p, q[0]), (1.0 - p, q[1])].into_iter().enumerate() {
        v[t3.frame_index(0, l, 0, 0, 0)] = c((w * ql).sqrt(), 0.0);
        v[t3.frame_index(0, l, 0, 1, 0)] = c((w * (1.0 - ql)).sqrt(), 0.0);
    }
    t3.basis_change().apply(&v)
}

fn outputs(p: &dyn Channel, q: &dyn Channel, v: &[C64]) -> (DensityMatrix, DensityMatrix) {
    let x = ComplexMatrix::projector(v);
    (DensityMatrix::assume(p.apply_matrix(&x)), DensityMatrix::assume(q.apply_matrix(&x)))
}

/// Sandwiched divergence of the channel outputs at the given input parameters.
pub fn evaluate_at(t3: &ThreeLayer, p: f64, q: [f64; 2]) -> Result<f64> {
    let (pc, qc) = (t3.p_channel()?, t3.q_channel()?);
    let (a, b) = outputs(&pc, &qc, &input_vector(t3, p, q));
    sandwiched(&a, &b, constants().counterexample.alpha)
}

/// Sandwiched divergence of the channels restricted to block `(0, l)` at input `v ⊗ |0⟩_C`.
pub fn evaluate_block(t3: &ThreeLayer, l: usize, q: f64) -> Result<f64> {
    let (pc, qc) = (t3.p_channel()?, t3.q_channel()?);
    let cols = block_columns(t3, 0, l);
    let (rp, rq) = (Restricted::to_columns(&pc, t3.basis_change(), &cols)?, Restricted::to_columns(&qc, t3.basis_change(), &cols)?);
    // Local order inside the block is (α, β, γ); with a = 1 that is β·c + γ.
    let cc = t3.c()[0];
    let mut v = vec![C64::ZERO; cols.len()];
    v[0] = c(q.sqrt(), 0.0);
    v[cc] = c((1.0 - q).sqrt(), 0.0);
    let (a, b) = outputs(&rp, &rq, &v);
    sandwiched(&a, &b, constants().counterexample.alpha)
}

/// Frame columns of block `(k, l)` in `(α, β, γ)` order.
pub fn block_columns(t3: &ThreeLayer, k: usize, l: usize) -> Vec<usize> {
    let mut cols = Vec::new();
    for al in 0..t3.a()[l] {
        for be in 0..t3.b()[k][l] {
            for ga in 0..t3.c()[k] {
                cols.push(t3.frame_index(k, l, al, be, ga));
            }
        }
    }
    cols
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub bits: f64,
    pub achieved_by: crate::oracle::AchievedBy,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub alpha: f64,
    pub blocks: Vec<BlockOptimum>,
    /// Sandwiched divergence of the restricted channels at the per-block optimum.
    pub block_numeric_bits: Vec<f64>,
    pub bound_bits: f64,
    pub optimum: PairOptimum,
    /// Sandwiched divergence of the channel outputs at the optimal parameters.
    pub numeric_bits: f64,
    pub gap_bits: f64,
    pub strict_gap: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCheck>,
}

pub fn run(oracle_cfg: Option<&OptimizerConfig>) -> Result<CounterexampleReport> {
    let t3 = pair()?;
    let blocks = block_optima();
    let block_numeric_bits = blocks.iter().map(|b| evaluate_block(&t3, b.l, b.q)).collect::<Result<Vec<_>>>()?;
    let bound_bits = blocks.iter().map(|b| b.linear).sum::<f64>().log2();
    let optimum = pair_optimum();
    let numeric_bits = evaluate_at(&t3, optimum.p, [optimum.q1, optimum.q2])?;
    let gap_bits = bound_bits - optimum.bits;
    let oracle = match oracle_cfg {
        None => None,
        Some(cfg) => {
            let (pc, qc) = (t3.p_channel()?, t3.q_channel()?);
            let seed = input_vector(&t3, 0.5, [1.0, 1.0]);
            let kind = Divergence::Sandwiched(constants().counterexample.alpha);
            let o = maximize_channel_divergence_seeded(kind, &pc, &qc, 1, &[seed], cfg)?;
            Some(OracleCheck { bits: o.value_bits, achieved_by: o.achieved_by, seed: cfg.seed })
        }
    };
    Ok(CounterexampleReport {
        alpha: constants().counterexample.alpha,
        blocks,
        block_numeric_bits,
        bound_bits,
        optimum,
        numeric_bits,
        gap_bits,
        strict_gap: gap_bits > 0.0,
        oracle,
    })
}
