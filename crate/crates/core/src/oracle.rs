//! Brute-force verification: sphere ascent over pure inputs, the Choi max-divergence,
//! simplex grids, diamond-norm lower bounds and rank checks.
//!
//! Every search here is a lower bound on a supremum. Restarts run sequentially with
//! per-restart RNG streams derived from the seed, so reports are bit-identical across runs.

use crate::blockchan::{BlockIdempotent, Channel, Extended, choi, numerical_rank};
use crate::closedform::AuxKind;
use crate::error::{Error, Result};
use crate::matcore::{C64, CVector, ComplexMatrix, c, eig_hermitian, normalize};
use crate::random::{ginibre, random_pure, rng};
use crate::states::{DensityMatrix, Divergence, dmax};
use rand::Rng;
use serde::Serialize;

/// Added to the second argument while optimizing support-sensitive divergences.
pub const SIGMA_FLOOR: f64 = 1e-12;
/// Largest `ref_dim · d` accepted by the sphere search.
pub const MAX_SEARCH_DIM: usize = 1024;

#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_tol: f64,
    pub value_tol: f64,
    pub seed: u64,
    pub fd_step: f64,
    /// Coordinates differentiated per iteration; larger spaces use random subsets.
    pub max_coords: usize,
    /// Objective evaluations allowed per restart.
    pub max_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 2000,
            step_tol: 1e-9,
            value_tol: 1e-8,
            seed: 0,
            fd_step: 1e-6,
            max_coords: 64,
            max_evals: 200_000,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.max_coords == 0 || self.max_evals == 0 {
            return Err(Error::OutOfRange("optimizer counts must be positive".into()));
        }
        for (name, v) in [("step_tol", self.step_tol), ("value_tol", self.value_tol), ("fd_step", self.fd_step)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::OutOfRange(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AchievedBy {
    Seeded,
    Random,
}

#[derive(Clone, Debug)]
pub struct SphereOptimum {
    pub value: f64,
    pub vector: CVector,
    pub achieved_by: AchievedBy,
    pub evaluations: usize,
}

fn to_complex(x: &[f64]) -> CVector {
    x.chunks_exact(2).map(|p| c(p[0], p[1])).collect()
}

fn to_real(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn renormalize(x: &mut [f64]) {
    let n = x.iter().map(|t| t * t).sum::<f64>().sqrt();
    x.iter_mut().for_each(|t| *t /= n);
}

struct Ascent<'a> {
    f: &'a dyn Fn(&[C64]) -> f64,
    cfg: &'a OptimizerConfig,
    evals: usize,
}

impl Ascent<'_> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        (self.f)(&to_complex(x))
    }

    /// Projected finite-difference ascent with Armijo backtracking from `x`.
    fn run(&mut self, mut x: Vec<f64>, r: &mut impl Rng) -> (f64, Vec<f64>) {
        renormalize(&mut x);
        let n = x.len();
        let mut fx = self.eval(&x);
        let mut step = 1.0;
        let mut stalls = 0;
        let subset = n > self.cfg.max_coords;
        // Random subsets need several quiet iterations before a stall means convergence.
        let patience = if subset { (n / self.cfg.max_coords).max(3) } else { 2 };
        for _ in 0..self.cfg.max_iters {
            if !fx.is_finite() || self.evals >= self.cfg.max_evals {
                break;
            }
            let coords: Vec<usize> = if subset {
                rand::seq::index::sample(r, n, self.cfg.max_coords).into_vec()
            } else {
                (0..n).collect()
            };
            let h = self.cfg.fd_step;
            let mut g = vec![0.0; n];
            let mut probe = x.clone();
            for &i in &coords {
                if self.evals + 2 > self.cfg.max_evals {
                    return (fx, x);
                }
                probe[i] = x[i] + h;
                let up = self.eval(&probe);
                probe[i] = x[i] - h;
                let dn = self.eval(&probe);
                probe[i] = x[i];
                g[i] = if up.is_finite() && dn.is_finite() { (up - dn) / (2.0 * h) } else { 0.0 };
            }
            // Tangent projection at x.
            let radial: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
            g.iter_mut().zip(&x).for_each(|(gi, xi)| *gi -= radial * xi);
            let gn2: f64 = g.iter().map(|t| t * t).sum();
            if gn2.sqrt() < self.cfg.value_tol * 1e-2 {
                stalls += 1;
                if stalls >= patience {
                    break;
                }
                continue;
            }
            let mut accepted = false;
            while step >= self.cfg.step_tol && self.evals < self.cfg.max_evals {
                let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
                renormalize(&mut y);
                let fy = self.eval(&y);
                if fy >= fx + 1e-4 * step * gn2 {
                    let gain = fy - fx;
                    x = y;
                    fx = fy;
                    accepted = true;
                    step *= 2.0;
                    stalls = if gain < self.cfg.value_tol { stalls + 1 } else { 0 };
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                stalls += 1;
                step = 1.0;
            }
            if stalls >= patience {
                break;
            }
        }
        (fx, x)
    }
}

/// Maximizes `f` over unit vectors in `C^n`: one ascent per seed, then `cfg.restarts` ascents
/// from uniform random points. Returns as soon as `f` is `+∞` at an iterate.
pub fn maximize_on_sphere(n: usize, f: &dyn Fn(&[C64]) -> f64, seeds: &[CVector], cfg: &OptimizerConfig) -> Result<SphereOptimum> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::OutOfRange("sphere dimension must be positive".into()));
    }
    if let Some(s) = seeds.iter().find(|s| s.len() != n) {
        return Err(Error::DimensionMismatch(format!("seed of length {} for a search in C^{n}", s.len())));
    }
    let mut best: Option<SphereOptimum> = None;
    let mut evaluations = 0;
    let starts = seeds.len() + cfg.restarts;
    for i in 0..starts {
        let mut r = rng(cfg.seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let (x0, by) = if i < seeds.len() {
            (to_real(&seeds[i]), AchievedBy::Seeded)
        } else {
            (to_real(&random_pure(n, &mut r)), AchievedBy::Random)
        };
        let mut asc = Ascent { f, cfg, evals: 0 };
        let (v, x) = asc.run(x0, &mut r);
        evaluations += asc.evals;
        if best.as_ref().is_none_or(|b| v > b.value) {
            best = Some(SphereOptimum { value: v, vector: to_complex(&x), achieved_by: by, evaluations: 0 });
        }
        if v == f64::INFINITY {
            break;
        }
    }
    let mut best = best.expect("at least one start");
    best.evaluations = evaluations;
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct ChannelOptimum {
    pub value_bits: f64,
    pub state: DensityMatrix,
    pub vector: CVector,
    pub achieved_by: AchievedBy,
    pub evaluations: usize,
}

/// `id_r ⊗ Φ` on pure inputs. Uses a Kraus form read off the Choi eigendecomposition when
/// `J_Φ` is PSD and reproduces it within `1e-10`; otherwise falls back to the generic map.
enum PureAction<'a> {
    Kraus { kraus: Vec<ComplexMatrix>, r: usize },
    Generic(Extended<'a>),
}

impl<'a> PureAction<'a> {
    fn new(ch: &'a dyn Channel, r: usize) -> Result<Self> {
        let (din, dout) = (ch.input_dim(), ch.output_dim());
        let j = choi(ch);
        let e = eig_hermitian(&j.hermitian_part())?;
        let top = e.lambda_max().max(0.0);
        let min = e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if top > 0.0 && min >= -1e-12 * top {
            let kept: Vec<usize> = (0..e.eigenvalues.len()).filter(|&i| e.eigenvalues[i] > 1e-14 * top).collect();
            let mut kraus = Vec::with_capacity(kept.len());
            // Columns sqrt(lambda_i) v_i, so that W W^† is the kept part of J.
            let mut w = ComplexMatrix::zeros(j.rows(), kept.len());
            for (c, &i) in kept.iter().enumerate() {
                let v = e.vector(i);
                let s = e.eigenvalues[i].sqrt();
                kraus.push(ComplexMatrix::from_fn(dout, din, |a, x| v[x * dout + a] * s));
                for (row, z) in v.iter().enumerate() {
                    w[(row, c)] = z * s;
                }
            }
            let rebuilt = &w * &w.adjoint();
            if rebuilt.dist(&j) <= 1e-10 * j.max_abs().max(1.0) {
                return Ok(PureAction::Kraus { kraus, r });
            }
        }
        Ok(PureAction::Generic(Extended::new(ch, r)))
    }

    /// Output for the unnormalized pure input `v ∈ C^r ⊗ C^{din}`.
    fn apply(&self, v: &[C64]) -> ComplexMatrix {
        match self {
            PureAction::Generic(e) => e.apply_matrix(&ComplexMatrix::projector(v)),
            PureAction::Kraus { kraus, r } => {
                let (dout, din) = (kraus[0].rows(), kraus[0].cols());
                let n = r * dout;
                let mut out = vec![C64::ZERO; n * n];
                let mut w = vec![C64::ZERO; n];
                for k in kraus {
                    for rho in 0..*r {
                        for a in 0..dout {
                            let mut acc = C64::ZERO;
                            for x in 0..din {
                                acc += k[(a, x)] * v[rho * din + x];
                            }
                            w[rho * dout + a] = acc;
                        }
                    }
                    for (x, wx) in w.iter().enumerate() {
                        if *wx == C64::ZERO {
                            continue;
                        }
                        let row = &mut out[x * n..(x + 1) * n];
                        for (o, wy) in row.iter_mut().zip(&w) {
                            *o += wx * wy.conj();
                        }
                    }
                }
                ComplexMatrix::from_row_major(n, n, &out).expect("square buffer")
            }
        }
    }
}

fn check_pair(phi: &dyn Channel, psi: &dyn Channel) -> Result<usize> {
    let d = phi.input_dim();
    if psi.input_dim() != d || phi.output_dim() != psi.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "channels {}->{} and {}->{}",
            d,
            phi.output_dim(),
            psi.input_dim(),
            psi.output_dim()
        )));
    }
    Ok(d)
}

/// `Σ_i |i⟩|i⟩/√d` on `C^r ⊗ C^d` for `r = d`, and the uniform superposition otherwise.
pub fn maximally_entangled(r: usize, d: usize) -> CVector {
    let mut v = vec![C64::ZERO; r * d];
    if r == d {
        for i in 0..d {
            v[i * d + i] = c(1.0, 0.0);
        }
    } else {
        v.iter_mut().for_each(|z| *z = c(1.0, 0.0));
    }
    normalize(&v)
}

/// `sup_ψ D((id_r ⊗ Φ)(ψ) ‖ (id_r ⊗ Ψ)(ψ))` over pure `ψ ∈ C^{ref_dim} ⊗ C^d`.
pub fn maximize_channel_divergence(
    kind: Divergence,
    phi: &dyn Channel,
    psi: &dyn Channel,
    ref_dim: usize,
    cfg: &OptimizerConfig,
) -> Result<ChannelOptimum> {
    maximize_channel_divergence_seeded(kind, phi, psi, ref_dim, &[], cfg)
}

/// As [`maximize_channel_divergence`] with caller-supplied structured seeds ahead of the
/// maximally entangled one.
pub fn maximize_channel_divergence_seeded(
    kind: Divergence,
    phi: &dyn Channel,
    psi: &dyn Channel,
    ref_dim: usize,
    extra_seeds: &[CVector],
    cfg: &OptimizerConfig,
) -> Result<ChannelOptimum> {
    let d = check_pair(phi, psi)?;
    if ref_dim != 1 && ref_dim != d {
        return Err(Error::OutOfRange(format!("ref_dim = {ref_dim} must be 1 or {d}")));
    }
    let n = ref_dim * d;
    if n > MAX_SEARCH_DIM {
        return Err(Error::TooLarge { dim: n, cap: MAX_SEARCH_DIM });
    }
    let (aphi, apsi) = (PureAction::new(phi, ref_dim)?, PureAction::new(psi, ref_dim)?);
    let dout = ref_dim * phi.output_dim();
    let floor = ComplexMatrix::identity(dout).scale_real(SIGMA_FLOOR);
    let outputs = |v: &[C64]| (aphi.apply(v), apsi.apply(v));
    let exact = |v: &[C64]| -> f64 {
        let (a, b) = outputs(v);
        kind.eval(&DensityMatrix::assume(a), &DensityMatrix::assume(b)).unwrap_or(f64::NAN)
    };
    let smoothed = |v: &[C64]| -> f64 {
        let (a, b) = outputs(v);
        let b = if kind.needs_support() { &b + &floor } else { b };
        let val = kind.eval(&DensityMatrix::assume(a), &DensityMatrix::assume(b)).unwrap_or(f64::NAN);
        if val.is_nan() { f64::NEG_INFINITY } else { val }
    };
    let mut seeds: Vec<CVector> = extra_seeds.to_vec();
    seeds.push(maximally_entangled(ref_dim, d));
    // Infinite values: the smoothed objective cannot see them, so test the seeds exactly first.
    for (i, s) in seeds.iter().enumerate() {
        if s.len() == n && exact(s) == f64::INFINITY {
            return Ok(finish(f64::INFINITY, s.clone(), AchievedBy::Seeded, i + 1));
        }
    }
    let best = maximize_on_sphere(n, &smoothed, &seeds, cfg)?;
    let value = exact(&best.vector);
    if value.is_nan() {
        return Err(Error::NonFinite);
    }
    Ok(finish(value, best.vector, best.achieved_by, best.evaluations))
}

fn finish(value_bits: f64, vector: CVector, achieved_by: AchievedBy, evaluations: usize) -> ChannelOptimum {
    ChannelOptimum { value_bits, state: DensityMatrix::pure(&vector), vector, achieved_by, evaluations }
}

/// Exact cb max-divergence: `dmax(J_Φ/d ‖ J_Ψ/d)` on Choi states.
pub fn choi_dmax_cb(phi: &dyn Channel, psi: &dyn Channel) -> Result<f64> {
    let d = check_pair(phi, psi)? as f64;
    let jp = DensityMatrix::assume(choi(phi).scale_real(1.0 / d));
    let jq = DensityMatrix::assume(choi(psi).scale_real(1.0 / d));
    dmax(&jp, &jq)
}

/// Objective evaluated on the grid, independent of the closed forms.
fn aux_objective(kind: AuxKind, cs: &[f64], alpha: f64, mu: &[f64]) -> f64 {
    match kind {
        AuxKind::Softmax => mu
            .iter()
            .zip(cs)
            .map(|(&m, &cv)| if m > 0.0 { -m * m.log2() + m * cv } else { 0.0 })
            .sum(),
        AuxKind::Harmonic => mu.iter().zip(cs).map(|(m, cv)| m * m * cv).sum(),
        AuxKind::Hoelder => {
            let s: f64 = mu.iter().zip(cs).map(|(m, cv)| m.powf(1.0 / alpha) * cv.powf((alpha - 1.0) / alpha)).sum();
            alpha / (alpha - 1.0) * s.log2()
        }
    }
}

fn compositions(len: usize, total: usize, prefix: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if prefix.len() + 1 == len {
        prefix.push(total - prefix.iter().sum::<usize>());
        visit(prefix);
        prefix.pop();
        return;
    }
    let used: usize = prefix.iter().sum();
    for k in 0..=total - used {
        prefix.push(k);
        compositions(len, total, prefix, visit);
        prefix.pop();
    }
}

/// Exhaustive optimum over the simplex grid `{μ = k/resolution}`: the maximum for
/// softmax and hoelder, the minimum for harmonic.
pub fn grid_simplex_max(kind: AuxKind, cs: &[f64], resolution: usize, alpha: Option<f64>) -> Result<f64> {
    if cs.is_empty() || cs.len() > 4 {
        return Err(Error::OutOfRange(format!("grid supports 1 to 4 coefficients, got {}", cs.len())));
    }
    if resolution == 0 || resolution > 200 {
        return Err(Error::OutOfRange(format!("resolution {resolution} must be in 1..=200")));
    }
    let a = match kind {
        AuxKind::Hoelder => alpha.filter(|&a| a > 1.0).ok_or_else(|| Error::OutOfRange("hoelder grid requires alpha > 1".into()))?,
        _ => 0.0,
    };
    let minimize = kind == AuxKind::Harmonic;
    let mut best = if minimize { f64::INFINITY } else { f64::NEG_INFINITY };
    let mut mu = vec![0.0; cs.len()];
    compositions(cs.len(), resolution, &mut Vec::with_capacity(cs.len()), &mut |k| {
        for (m, &ki) in mu.iter_mut().zip(k) {
            *m = ki as f64 / resolution as f64;
        }
        let v = aux_objective(kind, cs, a, &mu);
        best = if minimize { best.min(v) } else { best.max(v) };
    });
    Ok(best)
}

fn trace_norm(x: &ComplexMatrix) -> f64 {
    eig_hermitian(&x.hermitian_part()).map(|e| e.eigenvalues.iter().map(|v| v.abs()).sum()).unwrap_or(f64::NAN)
}

/// Lower bound on `‖Φ − Ψ‖_◇` from pure inputs with a reference of dimension `d`.
pub fn diamond_lower(phi: &dyn Channel, psi: &dyn Channel, cfg: &OptimizerConfig) -> Result<f64> {
    let d = check_pair(phi, psi)?;
    let n = d * d;
    if n > MAX_SEARCH_DIM {
        return Err(Error::TooLarge { dim: n, cap: MAX_SEARCH_DIM });
    }
    let (aphi, apsi) = (PureAction::new(phi, d)?, PureAction::new(psi, d)?);
    let f = |v: &[C64]| trace_norm(&(&aphi.apply(v) - &apsi.apply(v)));
    let best = maximize_on_sphere(n, &f, &[maximally_entangled(d, d)], cfg)?;
    Ok(best.value.clamp(0.0, 2.0))
}

/// Largest `d^n` accepted by [`finite_n_perr`].
pub const PERR_MAX_DIM: usize = 16;

/// Upper bound `(1 − ½ diamond_lower(Φ^{⊗n}, Ψ^{⊗n}))/2` on the optimal error probability.
pub fn finite_n_perr(phi: &BlockIdempotent, psi: &BlockIdempotent, n: u32, cfg: &OptimizerConfig) -> Result<f64> {
    if !(1..=2).contains(&n) {
        return Err(Error::OutOfRange(format!("n = {n} must be 1 or 2")));
    }
    let dim = phi.total_dim().pow(n);
    if dim > PERR_MAX_DIM {
        return Err(Error::TooLarge { dim, cap: PERR_MAX_DIM });
    }
    let (p, q) = (phi.tensor_power(n as usize)?, psi.tensor_power(n as usize)?);
    Ok((1.0 - 0.5 * diamond_lower(&p, &q, cfg)?) / 2.0)
}

/// `rank Φ(X) ≥ rank X` on random PSD `X` of every rank, for a unital `Φ`.
pub fn rank_nondecreasing_check(ch: &dyn Channel, trials: usize, seed: u64) -> Result<bool> {
    let d = ch.input_dim();
    let unit = ch.apply_matrix(&ComplexMatrix::identity(d));
    if ch.output_dim() != d || unit.dist(&ComplexMatrix::identity(d)) > 1e-9 {
        return Err(Error::InvalidChannel("rank check requires a unital map".into()));
    }
    let mut r = rng(seed);
    for t in 0..trials {
        let k = 1 + t % d;
        let g = ginibre(d, k, &mut r);
        let x = &g * &g.adjoint();
        if numerical_rank(&ch.apply_matrix(&x).hermitian_part())? < numerical_rank(&x)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    #[serde(with = "crate::extreal")]
    pub formula_bits: f64,
    #[serde(with = "crate::extreal")]
    pub oracle_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::extreal::opt")]
    pub choi_bits: Option<f64>,
    #[serde(with = "crate::extreal")]
    pub gap: f64,
    pub achieved_by: AchievedBy,
    pub seed: u64,
}

impl VerificationReport {
    pub fn new(formula_bits: f64, oracle: &ChannelOptimum, choi_bits: Option<f64>, seed: u64) -> Self {
        let gap = if formula_bits == oracle.value_bits { 0.0 } else { formula_bits - oracle.value_bits };
        Self { formula_bits, oracle_bits: oracle.value_bits, choi_bits, gap, achieved_by: oracle.achieved_by, seed }
    }
}
