//! Named verification suites: each check carries a measured residual and its tolerance.

use crate::analysis::{Route, analyze_pair, require_block};
use crate::blockchan::{AnyChannel, BlockIdempotent, Channel, DEFAULT_SEED, Extended, Superoperator, apply_op, three_layer_decompose};
use crate::closedform::{AuxKind, appendix_d_optima, optimal_input_idq, optimal_input_pq, pimsner_popa, pq_formula};
use crate::constants::constants;
use crate::error::{Error, Result};
use crate::gns::{PERIPHERAL_TOL, dephasing_mixture, iterate_bounds, spectral_decompose};
use crate::oracle::{OptimizerConfig, choi_dmax_cb, grid_simplex_max, maximize_channel_divergence, maximize_channel_divergence_seeded};
use crate::random::{random_full_rank, random_three_layer, rng};
use crate::states::{DensityMatrix, Divergence, dmax, dmin, hypothesis_testing, petz_renyi, sandwiched, umegaki};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Slack for inequalities that hold exactly.
pub const INEQ_SLACK: f64 = 1e-9;
/// Seeded oracle vs closed form.
pub const SEEDED_TOL: f64 = 1e-7;
/// Random-start oracle overshoot.
pub const OVERSHOOT_TOL: f64 = 1e-6;
/// Choi and additivity comparisons.
pub const EXACT_TOL: f64 = 1e-8;
/// Simplex grid vs closed form.
pub const GRID_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    #[serde(rename = "ordering")]
    Ordering,
    #[serde(rename = "collapse")]
    Collapse,
    #[serde(rename = "additivity")]
    Additivity,
    #[serde(rename = "pinching")]
    Pinching,
    #[serde(rename = "appendixD")]
    AppendixD,
    #[serde(rename = "gns")]
    Gns,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ordering" => Suite::Ordering,
            "collapse" => Suite::Collapse,
            "additivity" => Suite::Additivity,
            "pinching" => Suite::Pinching,
            "appendixD" => Suite::AppendixD,
            "gns" => Suite::Gns,
            _ => {
                return Err(Error::Parse(format!(
                    "unknown suite {s:?}; expected ordering, collapse, additivity, pinching, appendixD or gns"
                )));
            }
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Signed so that `residual <= tolerance` passes.
    #[serde(with = "crate::extreal")]
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), pass: residual <= tolerance, residual, tolerance }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub instance: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn finish(suite: Suite, instance: impl Into<String>, checks: Vec<Check>) -> SuiteReport {
    let pass = checks.iter().all(|c| c.pass);
    SuiteReport { suite, instance: instance.into(), checks, pass }
}

/// Channels the suite runs on, when supplied.
#[derive(Default)]
pub struct SuiteInput<'a> {
    pub p: Option<&'a AnyChannel>,
    pub q: Option<&'a AnyChannel>,
}

pub fn run_suite(suite: Suite, input: &SuiteInput, cfg: &OptimizerConfig) -> Result<SuiteReport> {
    match suite {
        Suite::Ordering => ordering(200, cfg.seed),
        Suite::Collapse => collapse(input, cfg),
        Suite::Additivity => additivity(input, cfg.seed),
        Suite::Pinching => pinching(input, cfg),
        Suite::AppendixD => appendix_d(20, constants().grid.resolution, cfg.seed),
        Suite::Gns => gns(input),
    }
}

/// Worst slack of each link of the divergence chain and of the one-shot hypothesis-testing
/// sandwich, over `pairs` random full-rank pairs of dimension 2 to 4.
pub fn ordering(pairs: usize, seed: u64) -> Result<SuiteReport> {
    const NAMES: [&str; 8] = [
        "dmin <= petz(1/2)",
        "petz(1/2) <= petz(3/4)",
        "petz(3/4) <= umegaki",
        "umegaki <= sandwiched(2)",
        "sandwiched(2) <= sandwiched(3)",
        "sandwiched(3) <= dmax",
        "petz(1/2) - log(1/eps) <= hypothesis_testing",
        "hypothesis_testing <= sandwiched(2) + 2 log(1/(1-eps))",
    ];
    let mut worst = [f64::NEG_INFINITY; 8];
    let mut r = rng(seed);
    for _ in 0..pairs {
        let d = r.random_range(2..=4);
        let (rho, sigma) = (random_full_rank(d, 0.05, &mut r), random_full_rank(d, 0.05, &mut r));
        let eps: f64 = r.random_range(0.05..0.95);
        let chain = [
            dmin(&rho, &sigma)?,
            petz_renyi(&rho, &sigma, 0.5)?,
            petz_renyi(&rho, &sigma, 0.75)?,
            umegaki(&rho, &sigma)?,
            sandwiched(&rho, &sigma, 2.0)?,
            sandwiched(&rho, &sigma, 3.0)?,
            dmax(&rho, &sigma)?,
        ];
        let dh = hypothesis_testing(&rho, &sigma, eps)?.value;
        let mut viol = [0.0; 8];
        for i in 0..6 {
            viol[i] = chain[i] - chain[i + 1];
        }
        viol[6] = chain[1] - (1.0 / eps).log2() - dh;
        viol[7] = dh - chain[4] - 2.0 * (1.0 / (1.0 - eps)).log2();
        for (w, v) in worst.iter_mut().zip(viol) {
            *w = w.max(v);
        }
    }
    let checks = NAMES.iter().zip(worst).map(|(n, w)| Check::new(*n, w, INEQ_SLACK)).collect();
    Ok(finish(Suite::Ordering, format!("{pairs} random full-rank pairs, seed {seed}"), checks))
}

/// Total dimension cap for built-in random instances, keeping the stabilized search small.
pub const RANDOM_PAIR_MAX_DIM: usize = 6;

/// Random common-invariant pair, redrawn until it acts on at most [`RANDOM_PAIR_MAX_DIM`] dimensions.
pub fn random_common_pair(seed: u64) -> Result<(AnyChannel, AnyChannel)> {
    let mut r = rng(seed);
    loop {
        let t = random_three_layer(2, 2, 2, &mut r)?;
        if t.total_dim() <= RANDOM_PAIR_MAX_DIM {
            return Ok((AnyChannel::Block(t.p_channel()?), AnyChannel::Block(t.q_channel()?)));
        }
    }
}

fn exact_at(kind: Divergence, p: &dyn Channel, q: &dyn Channel, state: &DensityMatrix) -> Result<f64> {
    let r = state.dim() / p.input_dim();
    let (a, b) = (apply_op(&Extended::new(p, r), state.matrix())?, apply_op(&Extended::new(q, r), state.matrix())?);
    kind.eval(&DensityMatrix::assume(a.hermitian_part()), &DensityMatrix::assume(b.hermitian_part()))
}

/// Stabilized dmin, umegaki and dmax all equal the closed form, at the optimal input and
/// as an upper limit for unseeded search.
pub fn collapse(input: &SuiteInput, cfg: &OptimizerConfig) -> Result<SuiteReport> {
    let owned;
    let (p, q, instance) = match (input.p, input.q) {
        (Some(p), Some(q)) => (p, q, "supplied pair".to_string()),
        _ => {
            owned = random_common_pair(cfg.seed)?;
            (&owned.0, &owned.1, format!("random common-invariant pair, seed {}", cfg.seed))
        }
    };
    let a = analyze_pair(p, q, 2.0, cfg)?;
    let (pb, qb) = (require_block(p)?, require_block(q)?);
    let d = pb.total_dim();
    let formula = a.cb.divergence.value_bits;
    let mut checks = Vec::new();
    let kinds = [Divergence::Dmin, Divergence::Umegaki, Divergence::Dmax];
    match a.route {
        Route::IdentityVsChannel => {
            let seed = optimal_input_idq(&qb, true)?;
            for kind in kinds {
                let s = maximize_channel_divergence_seeded(kind, &pb, &qb, d, &[seed.clone()], cfg)?;
                checks.push(Check::new(format!("seeded {} = formula", kind.name()), (s.value_bits - formula).abs(), SEEDED_TOL));
                let u = maximize_channel_divergence(kind, &pb, &qb, d, cfg)?;
                checks.push(Check::new(format!("unseeded {} <= formula", kind.name()), u.value_bits - formula, OVERSHOOT_TOL));
            }
        }
        Route::CommonInvariant => {
            let t = three_layer_decompose(&pb, &qb, DEFAULT_SEED)?;
            let state = optimal_input_pq(&t, true)?;
            for kind in kinds {
                let v = exact_at(kind, &pb, &qb, &state)?;
                checks.push(Check::new(format!("{} at optimal input = formula", kind.name()), (v - formula).abs(), SEEDED_TOL));
                let u = maximize_channel_divergence(kind, &pb, &qb, d, cfg)?;
                checks.push(Check::new(format!("unseeded {} <= formula", kind.name()), u.value_bits - formula, OVERSHOOT_TOL));
            }
        }
        Route::GeneralBound | Route::InclusionFails => {
            return Err(Error::InvalidChannel(format!("collapse needs P = id or a common invariant state; pair routes to {:?}", a.route)));
        }
    }
    checks.push(Check::new("choi dmax_cb = formula", (choi_dmax_cb(&pb, &qb)? - formula).abs(), EXACT_TOL));
    Ok(finish(Suite::Collapse, instance, checks))
}

/// Two-copy closed form equals twice the single-copy value, from the tensor-power structure
/// and from the Choi matrices of the squared channels.
pub fn additivity(input: &SuiteInput, seed: u64) -> Result<SuiteReport> {
    let owned;
    let (p, q, instance) = match (input.p, input.q) {
        (Some(p), Some(q)) => (p, q, "supplied pair".to_string()),
        (None, Some(q)) | (Some(q), None) => {
            owned = (AnyChannel::Block(BlockIdempotent::identity(q.dim())?), q.clone());
            (&owned.0, &owned.1, "identity vs supplied channel".to_string())
        }
        (None, None) => {
            owned = random_common_pair(seed)?;
            (&owned.0, &owned.1, format!("random common-invariant pair, seed {seed}"))
        }
    };
    let (pb, qb) = (require_block(p)?, require_block(q)?);
    let t = three_layer_decompose(&pb, &qb, DEFAULT_SEED)?;
    if !t.common_invariant() {
        return Err(Error::InvalidChannel("additivity needs a common invariant state".into()));
    }
    let one = pq_formula(&t, true)?.bits;
    let two = pq_formula(&t.tensor_power(2)?, true)?.bits;
    let mut checks = vec![Check::new("structured two-copy = 2 x one-copy", (two - 2.0 * one).abs(), EXACT_TOL)];
    let d = pb.total_dim();
    if d * d <= 16 {
        let (p2, q2) = (pb.superoperator()?.tensor_power(2)?, qb.superoperator()?.tensor_power(2)?);
        checks.push(Check::new("choi two-copy = 2 x one-copy", (choi_dmax_cb(&p2, &q2)? - 2.0 * one).abs(), EXACT_TOL));
    }
    Ok(finish(Suite::Additivity, instance, checks))
}

/// Pimsner–Popa constants of a conditional expectation against the oracle (plain) and the
/// Choi route (cb). Defaults to the diagonal pinchings on `C^2, C^3, C^4`.
pub fn pinching(input: &SuiteInput, cfg: &OptimizerConfig) -> Result<SuiteReport> {
    let targets: Vec<(String, BlockIdempotent)> = match input.q.or(input.p) {
        Some(e) => vec![("supplied channel".into(), require_block(e)?)],
        None => (2..=4).map(|n| Ok((format!("dephasing on C^{n}"), BlockIdempotent::dephasing(n)?))).collect::<Result<_>>()?,
    };
    let mut checks = Vec::new();
    for (name, e) in &targets {
        let (c, c_cb) = pimsner_popa(e)?;
        let id = BlockIdempotent::identity(e.total_dim())?;
        let o = maximize_channel_divergence(Divergence::Dmax, &id, e, 1, cfg)?;
        checks.push(Check::new(format!("{name}: oracle C = formula"), (o.value_bits.exp2() - c).abs(), 1e-4));
        let j = choi_dmax_cb(&id, e)?.exp2();
        checks.push(Check::new(format!("{name}: choi C_cb = formula"), (j - c_cb).abs() / c_cb, EXACT_TOL));
    }
    Ok(finish(Suite::Pinching, format!("{} conditional expectation(s)", targets.len()), checks))
}

/// Random coefficients for one auxiliary problem, with `alpha` for the Hölder kind.
pub fn random_aux_instance(kind: AuxKind, r: &mut impl Rng) -> (Vec<f64>, Option<f64>) {
    let n = r.random_range(2..=4);
    match kind {
        AuxKind::Softmax => ((0..n).map(|_| r.random_range(-2.0..2.0)).collect(), None),
        AuxKind::Harmonic => ((0..n).map(|_| r.random_range(0.5..3.0)).collect(), None),
        AuxKind::Hoelder => ((0..n).map(|_| r.random_range(0.1..2.0)).collect(), Some(r.random_range(1.2..3.0))),
    }
}

/// Closed-form simplex optima against the grid search, worst error per kind.
pub fn appendix_d(sets: usize, resolution: usize, seed: u64) -> Result<SuiteReport> {
    let mut r = rng(seed);
    let mut checks = Vec::new();
    for (name, kind) in [("softmax", AuxKind::Softmax), ("harmonic", AuxKind::Harmonic), ("hoelder", AuxKind::Hoelder)] {
        let mut worst = 0.0f64;
        for _ in 0..sets {
            let (cs, alpha) = random_aux_instance(kind, &mut r);
            let (v, _) = appendix_d_optima(kind, &cs, alpha)?;
            worst = worst.max((grid_simplex_max(kind, &cs, resolution, alpha)? - v).abs());
        }
        checks.push(Check::new(format!("{name}: grid = closed form"), worst, GRID_TOL));
    }
    Ok(finish(Suite::AppendixD, format!("{sets} sets per kind, resolution {resolution}, seed {seed}"), checks))
}

/// Iterate sandwich containment and shrinking width over the configured powers. Defaults to the
/// dephasing mixture against pure dephasing with the maximally mixed reference state.
pub fn gns(input: &SuiteInput) -> Result<SuiteReport> {
    let g = &constants().gns_example;
    let (phi, psi, tau, instance) = match (input.p, input.q) {
        (Some(p), Some(q)) => {
            let (phi, psi) = (p.superoperator()?, q.superoperator()?);
            let tau = spectral_decompose(&phi, PERIPHERAL_TOL)?.invariant_state;
            (phi, psi, tau, "supplied pair".to_string())
        }
        _ => {
            let dep: Superoperator = BlockIdempotent::dephasing(g.dim)?.superoperator()?;
            let mix = dephasing_mixture(g.dim, g.s)?;
            (mix, dep, DensityMatrix::maximally_mixed(g.dim), format!("mixture s = {} vs dephasing on C^{}", g.s, g.dim))
        }
    };
    let mut checks = Vec::new();
    let mut prev: Option<f64> = None;
    for &power in &g.powers {
        let b = iterate_bounds(&phi, &psi, &tau, power)?;
        if let Some(m) = b.middle_dmax_bits {
            checks.push(Check::new(format!("2k = {power}: lower <= choi middle"), b.lower_bits - m, INEQ_SLACK));
            checks.push(Check::new(format!("2k = {power}: choi middle <= upper"), m - b.upper_bits, INEQ_SLACK));
        }
        let width = b.upper_bits - b.lower_bits;
        let cap = (1.0 + b.eps_phi).log2() - (1.0 - b.eps_psi).log2() + (1.0 + b.eps_psi).log2();
        checks.push(Check::new(format!("2k = {power}: width <= epsilon bound"), width - cap, INEQ_SLACK));
        if let Some(w) = prev {
            checks.push(Check::new(format!("2k = {power}: width shrinks"), width - w, 0.0));
        }
        prev = Some(width);
    }
    Ok(finish(Suite::Gns, instance, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> OptimizerConfig {
        OptimizerConfig { restarts: 1, max_iters: 300, ..OptimizerConfig::default() }
    }

    #[test]
    fn builtin_suites_pass() {
        for suite in [Suite::Ordering, Suite::Additivity, Suite::Pinching, Suite::Gns] {
            let r = run_suite(suite, &SuiteInput::default(), &quick()).unwrap();
            assert!(r.pass, "{suite:?}: {:?}", r.checks);
        }
    }

    #[test]
    fn collapse_on_identity_pair() {
        let id = AnyChannel::Block(BlockIdempotent::identity(2).unwrap());
        let dep = AnyChannel::Block(BlockIdempotent::dephasing(2).unwrap());
        let r = collapse(&SuiteInput { p: Some(&id), q: Some(&dep) }, &quick()).unwrap();
        assert!(r.pass, "{:?}", r.checks);
        let r = collapse(&SuiteInput::default(), &quick()).unwrap();
        assert!(r.pass, "{:?}", r.checks);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in ["ordering", "collapse", "additivity", "pinching", "appendixD", "gns"] {
            let suite: Suite = s.parse().unwrap();
            assert_eq!(serde_json::to_value(suite).unwrap(), s);
        }
        assert!("appendixd".parse::<Suite>().is_err());
    }
}
