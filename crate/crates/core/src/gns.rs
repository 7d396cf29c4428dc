//! Channels in detailed balance with a full-rank state: peripheral projections, mixing
//! constants and the sandwich on even iterates.

use crate::blockchan::{
    BlockIdempotent, Channel, Superoperator, fixed_point_algebra, inclusion_holds, three_layer_decompose,
    DEFAULT_SEED,
};
use crate::closedform::{d_idq_cb, d_pq_common_cb};
use crate::error::{Error, Result};
use crate::matcore::{C64, ComplexMatrix, eigenvalues_general, inverse, null_space};
use crate::oracle::choi_dmax_cb;
use crate::states::DensityMatrix;
use serde::Serialize;

pub const PERIPHERAL_TOL: f64 = 1e-8;
/// Eigenvalues closer than this are treated as one eigenvalue when assembling projectors.
const CLUSTER_TOL: f64 = 1e-6;
const GNS_TOL: f64 = 1e-9;
/// Largest dimension for which the iterate middle value is computed from Choi matrices.
pub const MIDDLE_MAX_DIM: usize = 8;

/// `(bool, residual)` for `Tr(Φ†(X) Y τ) = Tr(X Φ†(Y) τ)` over all matrix units `X, Y`.
pub fn is_gns_symmetric(phi: &Superoperator, tau: &DensityMatrix) -> Result<(bool, f64)> {
    let d = phi.dim();
    if tau.dim() != d {
        return Err(Error::DimensionMismatch(format!("reference state on C^{} for a channel on C^{d}", tau.dim())));
    }
    if !tau.is_full_rank()? {
        return Err(Error::InvalidState("reference state must have full rank".into()));
    }
    let residual = phi.apply_matrix(tau.matrix()).dist(tau.matrix());
    if residual > GNS_TOL {
        return Err(Error::NotInvariant { residual });
    }
    let t = tau.matrix();
    // With X = E_ij, Y = E_kl: Tr(Φ†(X) Y τ) = (τ Φ†(E_ij))_{lk} and Tr(X Φ†(Y) τ) = (Φ†(E_kl) τ)_{ji}.
    let adj: Vec<ComplexMatrix> = (0..d * d).map(|n| phi.adjoint_matrix(&ComplexMatrix::matrix_unit(d, n / d, n % d))).collect();
    let left: Vec<ComplexMatrix> = adj.iter().map(|a| t * a).collect();
    let right: Vec<ComplexMatrix> = adj.iter().map(|a| a * t).collect();
    let mut res: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    res = res.max((left[i * d + j][(l, k)] - right[k * d + l][(j, i)]).norm());
                }
            }
        }
    }
    Ok((res <= GNS_TOL, res))
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<C64>,
    pub peripheral_projection: Superoperator,
    /// Structured form of the peripheral projection.
    pub peripheral_blocks: BlockIdempotent,
    pub mu: f64,
    pub gns_symmetric: bool,
    pub invariant_state: DensityMatrix,
    pub warnings: Vec<String>,
}

fn cluster_complex(ev: &[C64], tol: f64) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::new();
    for &z in ev {
        match out.iter_mut().find(|cl| (cl[0] - z).norm() <= tol) {
            Some(cl) => cl.push(z),
            None => out.push(vec![z]),
        }
    }
    out
}

/// Peripheral projection `P_Φ = Σ_{|λ| ≥ 1 − tol} P_λ` with `μ` the largest modulus below the cut.
pub fn spectral_decompose(phi: &Superoperator, tol: f64) -> Result<SpectralData> {
    phi.validate()?;
    let d = phi.dim();
    let n = d * d;
    let t = phi.transfer();
    let eigenvalues = eigenvalues_general(t)?;
    let cut = 1.0 - tol;
    let mu = eigenvalues.iter().map(|z| z.norm()).filter(|&r| r < cut).fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if cut - mu < 10.0 * tol {
        warnings.push(format!("spectral gap {:.3e} is within 10x the peripheral tolerance", cut - mu));
    }
    let peripheral: Vec<C64> = eigenvalues.iter().copied().filter(|z| z.norm() >= cut).collect();
    let mut proj = ComplexMatrix::zeros(n, n);
    let id = ComplexMatrix::identity(n);
    for cl in cluster_complex(&peripheral, CLUSTER_TOL) {
        let lam = cl.iter().sum::<C64>() / cl.len() as f64;
        let shifted = t - &id.scale(lam);
        let right = null_space(&shifted, 1e-7)?;
        let left = null_space(&shifted.adjoint(), 1e-7)?;
        if right.cols() != cl.len() || left.cols() != cl.len() {
            return Err(Error::Defective { re: lam.re, im: lam.im });
        }
        // Spectral projector R (L† R)^{-1} L†.
        let g = inverse(&(&left.adjoint() * &right))?;
        proj = &proj + &(&(&right * &g) * &left.adjoint());
    }
    let peripheral_projection = Superoperator::from_transfer(proj)?;
    let (idem, residual) = peripheral_projection.is_idempotent()?;
    if !idem {
        return Err(Error::NotIdempotent { residual });
    }
    let comm = (&(t * peripheral_projection.transfer()) - &(peripheral_projection.transfer() * t)).max_abs();
    if comm > 1e-8 {
        return Err(Error::AlgebraStructure(format!("peripheral projection does not commute with the channel: {comm:.3e}")));
    }
    // Routing through the fixed-point algebra confirms the block form used by the closed forms.
    fixed_point_algebra(&peripheral_projection)?;
    let peripheral_blocks = BlockIdempotent::from_superoperator(&peripheral_projection, DEFAULT_SEED)?;
    let invariant_state = DensityMatrix::assume(
        peripheral_projection.apply_matrix(&ComplexMatrix::identity(d).scale_real(1.0 / d as f64)).hermitian_part(),
    );
    let gns_symmetric = match is_gns_symmetric(phi, &invariant_state) {
        Ok((flag, _)) => flag,
        Err(_) => false,
    };
    if gns_symmetric && eigenvalues.iter().any(|z| z.im.abs() > 1e-8) {
        warnings.push("detailed balance holds but the spectrum is not real".into());
    }
    Ok(SpectralData { eigenvalues, peripheral_projection, peripheral_blocks, mu, gns_symmetric, invariant_state, warnings })
}

#[derive(Clone, Debug, Serialize)]
pub struct Mixing {
    pub power: u32,
    pub mu: f64,
    #[serde(with = "crate::extreal")]
    pub dcb_bits: f64,
    /// `μ^{2k} · D^cb(id ‖ P_Φ)`.
    pub epsilon: f64,
    /// Smallest admissible `2k` is strictly above this value.
    #[serde(with = "crate::extreal")]
    pub threshold_2k: f64,
}

fn check_power(power: u32) -> Result<()> {
    if power == 0 {
        return Err(Error::OutOfRange("iterate power must be positive".into()));
    }
    if power % 2 == 1 {
        return Err(Error::OddPower(power));
    }
    Ok(())
}

pub fn mixing_epsilon(s: &SpectralData, power: u32) -> Result<Mixing> {
    check_power(power)?;
    let dcb_bits = d_idq_cb(&s.peripheral_blocks)?;
    let epsilon = if s.mu == 0.0 { 0.0 } else { s.mu.powi(power as i32) * dcb_bits };
    let threshold_2k = if s.mu == 0.0 { f64::NEG_INFINITY } else { dcb_bits.log2() / (1.0 / s.mu).log2() };
    Ok(Mixing { power, mu: s.mu, dcb_bits, epsilon, threshold_2k })
}

#[derive(Clone, Debug, Serialize)]
pub struct Bracket {
    #[serde(with = "crate::extreal")]
    pub lower: f64,
    #[serde(with = "crate::extreal")]
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrongConverseRow {
    pub r: f64,
    /// Present when `r` exceeds the upper end of the divergence bracket.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    /// Present when `r` exceeds the lower end of the divergence bracket.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentBrackets {
    pub stein: Bracket,
    pub chernoff: Bracket,
    pub strong_converse: Vec<StrongConverseRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterateBounds {
    pub power: u32,
    pub mu: [f64; 2],
    #[serde(with = "crate::extreal")]
    pub threshold_2k: f64,
    pub eps_phi: f64,
    pub eps_psi: f64,
    #[serde(with = "crate::extreal")]
    pub peripheral_bits: f64,
    #[serde(with = "crate::extreal")]
    pub lower_bits: f64,
    #[serde(with = "crate::extreal")]
    pub upper_bits: f64,
    /// `D^cb_max(Φ^{2k} ‖ Ψ^{2k})` from Choi matrices, for small dimensions.
    #[serde(skip_serializing_if = "Option::is_none", with = "crate::extreal::opt")]
    pub middle_dmax_bits: Option<f64>,
    pub inclusion: bool,
    pub valid: bool,
    pub exponent_brackets: ExponentBrackets,
    pub warnings: Vec<String>,
}

/// Sandwich on `D^cb_min(Φ^{2k}‖Ψ^{2k}) ≤ D^cb_max(Φ^{2k}‖Ψ^{2k})` for channels in detailed
/// balance with the same `τ`.
pub fn iterate_bounds(phi: &Superoperator, psi: &Superoperator, tau: &DensityMatrix, power: u32) -> Result<IterateBounds> {
    check_power(power)?;
    for ch in [phi, psi] {
        let (ok, residual) = is_gns_symmetric(ch, tau)?;
        if !ok {
            return Err(Error::NotGnsSymmetric { residual });
        }
    }
    let (sp, sq) = (spectral_decompose(phi, PERIPHERAL_TOL)?, spectral_decompose(psi, PERIPHERAL_TOL)?);
    let (mp, mq) = (mixing_epsilon(&sp, power)?, mixing_epsilon(&sq, power)?);
    let ap = fixed_point_algebra(&sp.peripheral_projection)?;
    let aq = fixed_point_algebra(&sq.peripheral_projection)?;
    let inclusion = inclusion_holds(&ap, &aq);
    let peripheral_bits = if inclusion {
        let t = three_layer_decompose(&sp.peripheral_blocks, &sq.peripheral_blocks, DEFAULT_SEED)?;
        d_pq_common_cb(&t)?.0
    } else {
        f64::INFINITY
    };
    let (ep, eq) = (mp.epsilon, mq.epsilon);
    let lower_bits = peripheral_bits - (1.0 + eq).log2();
    let upper_bits = if eq >= 1.0 { f64::INFINITY } else { peripheral_bits + (1.0 + ep).log2() - (1.0 - eq).log2() };
    let threshold_2k = mp.threshold_2k.max(mq.threshold_2k);
    let valid = inclusion && (power as f64) > threshold_2k && eq < 1.0;
    let middle_dmax_bits = if phi.dim() <= MIDDLE_MAX_DIM {
        Some(choi_dmax_cb(&phi.power(power), &psi.power(power))?)
    } else {
        None
    };
    let rates: Vec<f64> = if upper_bits.is_finite() { [0.25, 0.5, 1.0, 2.0].iter().map(|x| upper_bits + x).collect() } else { vec![] };
    let strong_converse = rates
        .iter()
        .map(|&r| StrongConverseRow {
            r,
            lower: (r > upper_bits).then(|| r - upper_bits),
            upper: (r > lower_bits).then(|| r - lower_bits),
        })
        .collect();
    let br = || Bracket { lower: lower_bits, upper: upper_bits };
    let mut warnings = sp.warnings.clone();
    warnings.extend(sq.warnings.iter().cloned());
    for (name, m) in [("first", &mp), ("second", &mq)] {
        if m.dcb_bits > 1.0 + GNS_TOL && m.epsilon > 0.0 {
            warnings.push(format!(
                "{name} channel: D^cb(id || P) = {:.4} bits exceeds 1, where the bit-scaled epsilon is not a cp-order constant",
                m.dcb_bits
            ));
        }
    }
    if !valid {
        warnings.push(format!("2k = {power} does not exceed the threshold {threshold_2k:.4}; bounds are not certified"));
    }
    Ok(IterateBounds {
        power,
        mu: [sp.mu, sq.mu],
        threshold_2k,
        eps_phi: ep,
        eps_psi: eq,
        peripheral_bits,
        lower_bits,
        upper_bits,
        middle_dmax_bits,
        inclusion,
        valid,
        exponent_brackets: ExponentBrackets { stein: br(), chernoff: br(), strong_converse },
        warnings,
    })
}

/// `s · id + (1 − s) · Δ` for the computational-basis dephasing `Δ` on `C^d`.
pub fn dephasing_mixture(d: usize, s: f64) -> Result<Superoperator> {
    let dep = BlockIdempotent::dephasing(d)?.superoperator()?;
    Superoperator::identity(d).affine(&dep, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockchan::choi;
    use crate::matcore::c;
    use crate::random::{random_block_idempotent, rng};

    fn tau2() -> DensityMatrix {
        DensityMatrix::maximally_mixed(2)
    }

    #[test]
    fn gns_examples() {
        let id = Superoperator::identity(3);
        assert!(is_gns_symmetric(&id, &DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap()).unwrap().0);
        let dep = BlockIdempotent::dephasing(3).unwrap().superoperator().unwrap();
        let (ok, res) = is_gns_symmetric(&dep, &DensityMatrix::maximally_mixed(3)).unwrap();
        assert!(ok && res < 1e-10);
        // Damping followed by a rotation has a full-rank fixed point but no detailed balance.
        let g: f64 = 0.3;
        let k0 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - g).sqrt()]]);
        let k1 = ComplexMatrix::from_real_rows(&[&[0.0, g.sqrt()], &[0.0, 0.0]]);
        let (cs, sn) = (0.4f64.cos(), 0.4f64.sin());
        let u = ComplexMatrix::from_real_rows(&[&[cs, -sn], &[sn, cs]]);
        let ch = Superoperator::from_kraus(&[&u * &k0, &u * &k1]).unwrap();
        let s = spectral_decompose(&ch, PERIPHERAL_TOL).unwrap();
        assert!(s.invariant_state.is_full_rank().unwrap());
        assert!(!is_gns_symmetric(&ch, &s.invariant_state).unwrap().0);
        assert!(!s.gns_symmetric);
        assert!(matches!(is_gns_symmetric(&ch, &tau2()), Err(Error::NotInvariant { .. })));
    }

    #[test]
    fn spectral_examples() {
        let s = spectral_decompose(&Superoperator::identity(2), PERIPHERAL_TOL).unwrap();
        assert_eq!(s.mu, 0.0);
        assert!(s.peripheral_projection.transfer().dist(&ComplexMatrix::identity(4)) < 1e-9);
        let phi = dephasing_mixture(2, 0.5).unwrap();
        let s = spectral_decompose(&phi, PERIPHERAL_TOL).unwrap();
        assert!((s.mu - 0.5).abs() < 1e-12);
        let dep = BlockIdempotent::dephasing(2).unwrap().superoperator().unwrap();
        assert!(s.peripheral_projection.transfer().dist(dep.transfer()) < 1e-9);
        assert!(s.gns_symmetric);
        // Pauli-X conjugation: spectrum {1, 1, -1, -1}, everything is peripheral.
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let s = spectral_decompose(&Superoperator::from_kraus(&[x]).unwrap(), PERIPHERAL_TOL).unwrap();
        assert_eq!(s.mu, 0.0);
        assert!(s.peripheral_projection.transfer().dist(&ComplexMatrix::identity(4)) < 1e-9);
        assert_eq!(s.eigenvalues.iter().filter(|z| (z.re + 1.0).abs() < 1e-9).count(), 2);
    }

    #[test]
    fn defective_transfer_rejected() {
        // Not a channel: a Jordan block at 1 is caught by validation or the defect check.
        let mut t = ComplexMatrix::identity(4);
        t[(0, 1)] = c(1.0, 0.0);
        let s = Superoperator::from_transfer_unchecked(t).unwrap();
        assert!(spectral_decompose(&s, PERIPHERAL_TOL).is_err());
    }

    #[test]
    fn mixing_examples() {
        let dep = BlockIdempotent::dephasing(2).unwrap().superoperator().unwrap();
        let s = spectral_decompose(&dep, PERIPHERAL_TOL).unwrap();
        assert_eq!(mixing_epsilon(&s, 2).unwrap().epsilon, 0.0);
        let s = spectral_decompose(&dephasing_mixture(2, 0.5).unwrap(), PERIPHERAL_TOL).unwrap();
        for k in 1..4u32 {
            let m = mixing_epsilon(&s, 2 * k).unwrap();
            assert!((m.epsilon - 2f64.powi(-2 * k as i32)).abs() < 1e-12);
            let m2 = mixing_epsilon(&s, 4 * k).unwrap();
            assert!((m2.epsilon * m.dcb_bits - m.epsilon.powi(2)).abs() < 1e-12);
        }
        assert!(matches!(mixing_epsilon(&s, 3), Err(Error::OddPower(3))));
    }

    #[test]
    fn iterate_bound_examples() {
        let dep = BlockIdempotent::dephasing(2).unwrap().superoperator().unwrap();
        let b = iterate_bounds(&dep, &dep, &tau2(), 2).unwrap();
        assert!(b.lower_bits.abs() < 1e-9 && b.upper_bits.abs() < 1e-9);
        let phi = dephasing_mixture(2, 0.5).unwrap();
        let b = iterate_bounds(&phi, &dep, &tau2(), 4).unwrap();
        assert!(b.lower_bits.abs() < 1e-9);
        assert!((b.upper_bits - (1.0 + 1.0 / 16.0f64).log2()).abs() < 1e-9);
        let m = b.middle_dmax_bits.unwrap();
        assert!(m >= b.lower_bits - 1e-9 && m <= b.upper_bits + 1e-9);
        assert!(b.valid && b.inclusion);
        assert!(matches!(iterate_bounds(&phi, &dep, &tau2(), 5), Err(Error::OddPower(5))));
    }

    fn cp_gap(p: &Superoperator, pk: &Superoperator, eps: f64) -> f64 {
        let (jp, jk) = (choi(p), choi(pk));
        [&jp.scale_real(1.0 + eps) - &jk, &jk - &jp.scale_real(1.0 - eps)]
            .iter()
            .map(|m| crate::matcore::eig_hermitian(m).unwrap().eigenvalues.last().copied().unwrap())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn iterates_fix_the_peripheral_projection_and_mix_in_cp_order() {
        for s in [0.5, 0.3, 0.8] {
            let phi = dephasing_mixture(2, s).unwrap();
            let sd = spectral_decompose(&phi, PERIPHERAL_TOL).unwrap();
            let p = &sd.peripheral_projection;
            for k in 1..=8u32 {
                let pk = phi.power(2 * k);
                assert!(pk.compose(p).unwrap().transfer().dist(p.transfer()) < 1e-8);
                let m = mixing_epsilon(&sd, 2 * k).unwrap();
                if (2 * k) as f64 > m.threshold_2k {
                    assert!(cp_gap(p, &pk, m.epsilon) > -1e-8, "s={s} k={k}");
                }
            }
        }
    }

    #[test]
    fn bit_scaled_epsilon_is_too_small_above_one_bit() {
        // D^cb(id || Δ_3) = log2 3 > 1: μ^{2k} D^cb undershoots the cp-order constant, while
        // μ^{2k} (2^{D^cb} − 1) is exact for a dephasing mixture.
        let phi = dephasing_mixture(3, 0.3).unwrap();
        let sd = spectral_decompose(&phi, PERIPHERAL_TOL).unwrap();
        let m = mixing_epsilon(&sd, 2).unwrap();
        let pk = phi.power(2);
        assert!(cp_gap(&sd.peripheral_projection, &pk, m.epsilon) < -1e-3);
        let exact = sd.mu.powi(2) * (m.dcb_bits.exp2() - 1.0);
        assert!(cp_gap(&sd.peripheral_projection, &pk, exact) > -1e-9);
    }

    #[test]
    fn non_peripheral_blocks_from_random_idempotent() {
        let q = random_block_idempotent(&[(1, 2), (1, 1)], &mut rng(6)).unwrap();
        let s = spectral_decompose(&q.superoperator().unwrap(), PERIPHERAL_TOL).unwrap();
        assert!(s.mu < 1e-12);
        assert!(s.peripheral_projection.transfer().dist(q.superoperator().unwrap().transfer()) < 1e-8);
    }
}
