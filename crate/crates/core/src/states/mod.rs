//! Density matrices and state divergences, all in bits.

mod hypothesis;

pub use hypothesis::{HypothesisTest, NeymanPearsonTest, hypothesis_testing};

use crate::error::{Error, Result};
use crate::matcore::{C64, ComplexMatrix, HermitianEig, eig_hermitian};
use serde::{Deserialize, Serialize};

/// Weight of the first argument outside the support of the second above which the
/// support inclusion is declared violated.
pub const SUPPORT_TOL: f64 = 1e-9;
/// `Tr(Pi_rho sigma)` at or below this counts as orthogonal supports.
pub const ORTHO_TOL: f64 = 1e-14;
const STATE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates positivity and unit trace (both within 1e-10).
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let h = m.to_hermitian()?;
        let tr = h.trace_re();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let e = eig_hermitian(&h)?;
        if let Some(&lmin) = e.eigenvalues.last() {
            if lmin < -STATE_TOL {
                return Err(Error::InvalidState(format!("smallest eigenvalue {lmin:.3e} is negative")));
            }
        }
        Ok(Self { matrix: h })
    }

    /// Wraps a matrix known to be a state up to roundoff (e.g. a channel output);
    /// only symmetrizes.
    pub fn assume(m: ComplexMatrix) -> Self {
        Self { matrix: m.hermitian_part() }
    }

    /// Rescales a nonzero PSD matrix to unit trace.
    pub fn normalized(m: &ComplexMatrix) -> Result<Self> {
        let h = m.to_hermitian()?;
        let tr = h.trace_re();
        if tr <= 0.0 {
            return Err(Error::InvalidState("cannot normalize a matrix with nonpositive trace".into()));
        }
        Self::new(h.scale_real(1.0 / tr))
    }

    pub fn pure(psi: &[C64]) -> Self {
        Self { matrix: ComplexMatrix::projector(psi) }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64) }
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diag(p))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn eig(&self) -> Result<HermitianEig> {
        eig_hermitian(&self.matrix)
    }

    pub fn rank(&self) -> Result<usize> {
        Ok(self.eig()?.rank())
    }

    pub fn is_full_rank(&self) -> Result<bool> {
        Ok(self.rank()? == self.dim())
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let m = ComplexMatrix::deserialize(d)?;
        DensityMatrix::new(m).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Selector for the divergences supported by the evaluators and the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum Divergence {
    Umegaki,
    Petz(f64),
    Sandwiched(f64),
    Dmax,
    Dmin,
}

impl Divergence {
    pub fn name(&self) -> &'static str {
        match self {
            Divergence::Umegaki => "umegaki",
            Divergence::Petz(_) => "petz",
            Divergence::Sandwiched(_) => "sandwiched",
            Divergence::Dmax => "dmax",
            Divergence::Dmin => "dmin",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Divergence::Petz(a) | Divergence::Sandwiched(a) => Some(*a),
            _ => None,
        }
    }

    /// Divergences that blow up on support violations of the second argument.
    pub fn needs_support(&self) -> bool {
        match self {
            Divergence::Umegaki | Divergence::Dmax => true,
            Divergence::Petz(a) | Divergence::Sandwiched(a) => *a > 1.0,
            Divergence::Dmin => false,
        }
    }

    pub fn eval(&self, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
        Ok(self.eval_with_warnings(rho, sigma)?.value)
    }

    pub fn eval_with_warnings(&self, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Evaluation> {
        let pair = Pair::new(rho, sigma)?;
        let value = match *self {
            Divergence::Umegaki => pair.umegaki(),
            Divergence::Petz(a) => pair.petz(a)?,
            Divergence::Sandwiched(a) => pair.sandwiched(a)?,
            Divergence::Dmax => pair.dmax()?,
            Divergence::Dmin => pair.dmin(),
        };
        Ok(Evaluation { value, warnings: pair.warnings(self.needs_support()) })
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub warnings: Vec<String>,
}

/// A divergence value with its provenance, as emitted by the command-line tool.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    #[serde(with = "crate::extreal")]
    pub value_bits: f64,
    pub infinite: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub achieving_state: Option<ComplexMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default, with = "crate::extreal::opt")]
    pub oracle_bits: Option<f64>,
    pub warnings: Vec<String>,
}

impl DivergenceReport {
    pub fn new(name: impl Into<String>, alpha: Option<f64>, value_bits: f64) -> Self {
        Self {
            name: name.into(),
            alpha,
            value_bits,
            infinite: value_bits.is_infinite(),
            achieving_state: None,
            oracle_bits: None,
            warnings: vec![],
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() || alpha == 1.0 {
        let hint = if alpha == 1.0 { " (use umegaki for alpha = 1)" } else { "" };
        return Err(Error::OutOfRange(format!("alpha = {alpha} must lie in (0,1) or (1,inf){hint}")));
    }
    Ok(())
}

/// `log2 sum_i exp2(x_i)` over finite entries; `-inf` when empty.
pub(crate) fn log2_sum_exp2(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().filter(|x| x.is_finite()).collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp2()).sum::<f64>().log2()
}

/// Shared spectral data of a (rho, sigma) pair.
struct Pair {
    r: HermitianEig,
    s: HermitianEig,
    rho: ComplexMatrix,
    /// `|<u_i|v_j>|^2` between eigenvectors of rho (rows) and sigma (columns).
    overlap: Vec<Vec<f64>>,
    r_sup: Vec<usize>,
    s_sup: Vec<usize>,
    /// Weight of rho on ker(sigma).
    outside: f64,
    /// `Tr(Pi_rho sigma)`.
    pi_rho_sigma: f64,
}

impl Pair {
    fn new(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Self> {
        if rho.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch(format!("states of dimension {} and {}", rho.dim(), sigma.dim())));
        }
        let r = rho.eig()?;
        let s = sigma.eig()?;
        let o = &r.eigenvectors.adjoint() * &s.eigenvectors;
        let n = rho.dim();
        let overlap: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| o[(i, j)].norm_sqr()).collect()).collect();
        let r_sup = r.support();
        let s_sup = s.support();
        let s_ker: Vec<usize> = (0..n).filter(|j| !s_sup.contains(j)).collect();
        let mut outside = 0.0;
        for i in 0..n {
            let w: f64 = s_ker.iter().map(|&j| overlap[i][j]).sum();
            outside += r.eigenvalues[i].max(0.0) * w;
        }
        let mut pi_rho_sigma = 0.0;
        for &i in &r_sup {
            for j in 0..n {
                pi_rho_sigma += overlap[i][j] * s.eigenvalues[j].max(0.0);
            }
        }
        Ok(Self {
            r,
            s,
            rho: rho.matrix().clone(),
            overlap,
            r_sup,
            s_sup,
            outside,
            pi_rho_sigma,
        })
    }

    fn support_violated(&self) -> bool {
        self.outside > SUPPORT_TOL
    }

    fn orthogonal(&self) -> bool {
        self.pi_rho_sigma <= ORTHO_TOL
    }

    fn warnings(&self, needs_support: bool) -> Vec<String> {
        let mut w = Vec::new();
        if needs_support && self.outside > 1e-12 && self.outside <= SUPPORT_TOL {
            w.push(format!("near-degenerate support: weight {:.3e} outside supp(sigma) ignored", self.outside));
        }
        if let Some(lmin) = self.s.lambda_min_support() {
            if lmin < 1e-8 * self.s.lambda_max() {
                w.push(format!("near-degenerate support: sigma has eigenvalue {lmin:.3e} just above the rank cutoff"));
            }
        }
        w
    }

    fn umegaki(&self) -> f64 {
        if self.support_violated() {
            return f64::INFINITY;
        }
        let neg_entropy: f64 = self.r_sup.iter().map(|&i| {
            let l = self.r.eigenvalues[i];
            l * l.log2()
        }).sum();
        let mut cross = 0.0;
        for i in 0..self.r.dim() {
            let l = self.r.eigenvalues[i].max(0.0);
            if l == 0.0 {
                continue;
            }
            for &j in &self.s_sup {
                cross += l * self.overlap[i][j] * self.s.eigenvalues[j].log2();
            }
        }
        neg_entropy - cross
    }

    /// `log2 Tr(rho^a sigma^{1-a})`, support-restricted.
    fn log2_petz_q(&self, a: f64) -> f64 {
        let mut terms = Vec::new();
        for &i in &self.r_sup {
            for &j in &self.s_sup {
                let o = self.overlap[i][j];
                if o > 0.0 {
                    terms.push(a * self.r.eigenvalues[i].log2() + (1.0 - a) * self.s.eigenvalues[j].log2() + o.log2());
                }
            }
        }
        log2_sum_exp2(terms)
    }

    fn petz(&self, a: f64) -> Result<f64> {
        check_alpha(a)?;
        if a > 1.0 && self.support_violated() {
            return Ok(f64::INFINITY);
        }
        if a < 1.0 && self.orthogonal() {
            return Ok(f64::INFINITY);
        }
        Ok(self.log2_petz_q(a) / (a - 1.0))
    }

    fn sandwiched(&self, a: f64) -> Result<f64> {
        check_alpha(a)?;
        if a > 1.0 && self.support_violated() {
            return Ok(f64::INFINITY);
        }
        if a < 1.0 && self.orthogonal() {
            return Ok(f64::INFINITY);
        }
        let p = (1.0 - a) / (2.0 * a);
        let sp = self.s.apply_fn(|x| x.powf(p), true)?;
        let m = sp.conjugate(&self.rho);
        let e = eig_hermitian(&m)?;
        let logq = log2_sum_exp2(e.eigenvalues.iter().filter(|&&x| x > 0.0).map(|x| a * x.log2()));
        Ok(logq / (a - 1.0))
    }

    fn dmax(&self) -> Result<f64> {
        if self.support_violated() {
            return Ok(f64::INFINITY);
        }
        let s = self.s.apply_fn(|x| x.powf(-0.5), true)?;
        let m = s.conjugate(&self.rho);
        let e = eig_hermitian(&m)?;
        Ok(e.lambda_max().log2())
    }

    fn dmin(&self) -> f64 {
        if self.orthogonal() {
            return f64::INFINITY;
        }
        -self.pi_rho_sigma.log2()
    }
}

pub fn umegaki(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Divergence::Umegaki.eval(rho, sigma)
}

pub fn petz_renyi(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Divergence::Petz(alpha).eval(rho, sigma)
}

pub fn sandwiched(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Divergence::Sandwiched(alpha).eval(rho, sigma)
}

pub fn dmax(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Divergence::Dmax.eval(rho, sigma)
}

pub fn dmin(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Divergence::Dmin.eval(rho, sigma)
}

/// `sup_{0<a<1} (1-a) D_a`. The search runs golden-section over `[1e-4, 1-1e-4]`; the
/// one-sided limits at both ends (`dmin` and `-log2 Tr(rho Pi_sigma)`) are included in
/// the supremum since the open interval does not attain them.
pub fn chernoff(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let pair = Pair::new(rho, sigma)?;
    if pair.orthogonal() {
        return Ok(f64::INFINITY);
    }
    let f = |a: f64| -pair.log2_petz_q(a);
    let (_, best) = golden_max(f, 1e-4, 1.0 - 1e-4, 1e-8);
    let left = pair.dmin();
    let rho_on_sigma = 1.0 - pair.outside;
    let right = if rho_on_sigma > 0.0 { -rho_on_sigma.log2() } else { f64::INFINITY };
    Ok(best.max(left).max(right).max(0.0))
}

/// Golden-section search for the maximum of a unimodal function; returns `(argmax, max)`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 { (x1, f1) } else { (x2, f2) }
}

pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("states of dimension {} and {}", rho.dim(), sigma.dim())));
    }
    let e = eig_hermitian(&(rho.matrix() - sigma.matrix()))?;
    Ok(0.5 * e.eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
}

/// Minimal average error for equal priors.
pub fn helstrom_error(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(((1.0 - trace_distance(rho, sigma)?) / 2.0).clamp(0.0, 0.5))
}
