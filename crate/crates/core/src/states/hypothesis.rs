use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, eig_hermitian};
use serde::Serialize;

/// Optimal test `M = P_+(rho - t sigma) + gamma P_0(rho - t sigma)`.
#[derive(Clone, Debug, Serialize)]
pub struct NeymanPearsonTest {
    #[serde(with = "crate::extreal")]
    pub threshold: f64,
    pub gamma: f64,
    pub m: ComplexMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisTest {
    #[serde(with = "crate::extreal")]
    pub value: f64,
    /// Set when a feasible test has zero overlap with sigma.
    pub infinite: bool,
    pub test: NeymanPearsonTest,
}

struct Split {
    plus: ComplexMatrix,
    zero: ComplexMatrix,
    plus_weight: f64,
    zero_weight: f64,
}

fn split(rho: &DensityMatrix, sigma: &DensityMatrix, t: f64, eta: f64) -> Result<Split> {
    let x = rho.matrix() - &sigma.matrix().scale_real(t);
    let e = eig_hermitian(&x)?;
    let pos: Vec<usize> = (0..e.dim()).filter(|&i| e.eigenvalues[i] > eta).collect();
    let zer: Vec<usize> = (0..e.dim()).filter(|&i| e.eigenvalues[i].abs() <= eta).collect();
    let plus = e.weighted_sum(&pos, |_| 1.0);
    let zero = e.weighted_sum(&zer, |_| 1.0);
    let plus_weight = plus.trace_product(rho.matrix()).re;
    let zero_weight = zero.trace_product(rho.matrix()).re;
    Ok(Split { plus, zero, plus_weight, zero_weight })
}

/// `-log2 min { Tr(M sigma) : Tr(M rho) >= 1 - eps, 0 <= M <= I }`, solved exactly by
/// bisection on the Neyman-Pearson threshold.
pub fn hypothesis_testing(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<HypothesisTest> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("states of dimension {} and {}", rho.dim(), sigma.dim())));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("epsilon = {eps} must lie in (0,1)")));
    }
    let target = 1.0 - eps;
    let es = sigma.eig()?;
    let smax = es.lambda_max();
    let smin = es.lambda_min_support().unwrap_or(smax);
    let ker = es.kernel_projector();
    let outside = ker.trace_product(rho.matrix()).re;
    if outside >= target {
        let gamma = target / outside;
        return Ok(HypothesisTest {
            value: f64::INFINITY,
            infinite: true,
            test: NeymanPearsonTest { threshold: f64::INFINITY, gamma, m: ker.scale_real(gamma) },
        });
    }
    let eta_at = |t: f64| 1e-13 * (1.0 + t * smax);
    let f = |t: f64| -> Result<f64> { Ok(split(rho, sigma, t, eta_at(t))?.plus_weight) };
    let mut hi = 2.0 / smin;
    while f(hi)? >= target {
        hi *= 4.0;
        if hi > 1e30 {
            return Err(Error::Linalg("Neyman-Pearson threshold did not bracket".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= target { lo = mid } else { hi = mid }
    }
    let t = hi;
    let eta = (4.0 * (hi - lo) * smax).max(1e-12 * (1.0 + t * smax));
    let s = split(rho, sigma, t, eta)?;
    let gamma = if s.zero_weight > 0.0 {
        ((target - s.plus_weight) / s.zero_weight).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let m = &s.plus + &s.zero.scale_real(gamma);
    let achieved = m.trace_product(rho.matrix()).re;
    if (achieved - target).abs() > 1e-9 {
        return Err(Error::Linalg(format!(
            "Neyman-Pearson test reached Tr(M rho) = {achieved}, target {target}"
        )));
    }
    let opt = m.trace_product(sigma.matrix()).re;
    let (value, infinite) = if opt <= 0.0 { (f64::INFINITY, true) } else { (-opt.log2(), false) };
    Ok(HypothesisTest { value, infinite, test: NeymanPearsonTest { threshold: t, gamma, m } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(p).unwrap()
    }

    #[test]
    fn identical_states() {
        let r = d(&[0.2, 0.3, 0.5]);
        for eps in [0.01, 0.3, 0.9] {
            let h = hypothesis_testing(&r, &r, eps).unwrap();
            assert!((h.value + (1.0 - eps).log2()).abs() < 1e-9, "eps {eps}: {}", h.value);
        }
    }

    #[test]
    fn classical_small_epsilon_limit() {
        let h = hypothesis_testing(&d(&[1.0, 0.0]), &d(&[0.5, 0.5]), 1e-9).unwrap();
        assert!((h.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn classical_matches_fractional_knapsack() {
        // Likelihood ratios 0.5/0.1, 0.3/0.3, 0.2/0.6: fill greedily to 1 - eps = 0.6.
        let h = hypothesis_testing(&d(&[0.5, 0.3, 0.2]), &d(&[0.1, 0.3, 0.6]), 0.4).unwrap();
        let expect = -(0.1f64 + 0.3 * (0.1 / 0.3)).log2();
        assert!((h.value - expect).abs() < 1e-9);
        assert!(h.test.gamma > 0.0 && h.test.gamma < 1.0);
    }

    #[test]
    fn test_is_a_valid_effect() {
        let r = d(&[0.5, 0.3, 0.2]);
        let s = d(&[0.1, 0.3, 0.6]);
        let h = hypothesis_testing(&r, &s, 0.25).unwrap();
        let e = eig_hermitian(&h.test.m).unwrap();
        assert!(e.eigenvalues.iter().all(|&x| x > -1e-10 && x < 1.0 + 1e-10));
        assert!((h.test.m.trace_product(r.matrix()).re - 0.75).abs() < 1e-9);
    }

    #[test]
    fn disjoint_support_is_infinite() {
        let h = hypothesis_testing(&d(&[1.0, 0.0]), &d(&[0.0, 1.0]), 0.1).unwrap();
        assert!(h.infinite && h.value.is_infinite());
        assert!((h.test.m.trace_product(&ComplexMatrix::from_real_diag(&[1.0, 0.0])).re - 0.9).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let r = d(&[0.5, 0.5]);
        assert!(hypothesis_testing(&r, &r, 0.0).is_err());
        assert!(hypothesis_testing(&r, &r, 1.0).is_err());
    }
}
