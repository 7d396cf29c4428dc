use super::{C64, ComplexMatrix, CVector, check_dim, eig_hermitian, singular_values};
use crate::error::{Error, Result};

/// Partial trace over every factor not listed in `keep`. Kept factors stay in their
/// original order regardless of the order of `keep`.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows() != total {
        return Err(Error::DimensionMismatch(format!(
            "factor dims {dims:?} multiply to {total}, matrix is {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::OutOfRange(format!("keep index {bad} for {} factors", dims.len())));
    }
    let kept: Vec<bool> = (0..dims.len()).map(|i| keep.contains(&i)).collect();
    let dk: usize = dims.iter().zip(&kept).filter(|(_, k)| **k).map(|(d, _)| d).product();
    let dt = total / dk.max(1);
    // For every full index: its (kept, traced) coordinates.
    let mut split = vec![(0usize, 0usize); total];
    for (f, slot) in split.iter_mut().enumerate() {
        let mut rem = f;
        let (mut ki, mut ti, mut kstride, mut tstride) = (0, 0, 1, 1);
        for (i, &d) in dims.iter().enumerate().rev() {
            let digit = rem % d;
            rem /= d;
            if kept[i] {
                ki += digit * kstride;
                kstride *= d;
            } else {
                ti += digit * tstride;
                tstride *= d;
            }
        }
        *slot = (ki, ti);
    }
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); dt];
    for (f, &(ki, ti)) in split.iter().enumerate() {
        groups[ti].push((f, ki));
    }
    let mut out = ComplexMatrix::zeros(dk, dk);
    for g in &groups {
        for &(r, kr) in g {
            for &(cl, kc) in g {
                out[(kr, kc)] += m[(r, cl)];
            }
        }
    }
    Ok(out)
}

/// Sum of the `k` largest eigenvalues.
pub fn ky_fan(h: &ComplexMatrix, k: usize) -> Result<f64> {
    let e = eig_hermitian(h)?;
    if k == 0 || k > e.dim() {
        return Err(Error::OutOfRange(format!("Ky Fan order {k} for dimension {}", e.dim())));
    }
    Ok(e.eigenvalues[..k].iter().sum())
}

/// Schatten p-norm; pass `f64::INFINITY` for the operator norm.
pub fn schatten_norm(m: &ComplexMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::OutOfRange(format!("Schatten index {p} must be >= 1")));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let s = singular_values(m)?;
    if p.is_infinite() {
        return Ok(s.iter().cloned().fold(0.0, f64::max));
    }
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = s.iter().map(|x| (x / smax).powf(p)).sum();
    Ok(smax * sum.powf(1.0 / p))
}

pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (r, cl) = (a.rows() * b.rows(), a.cols() * b.cols());
    check_dim(r.max(cl))?;
    let (br, bc) = (b.rows(), b.cols());
    Ok(ComplexMatrix::from_fn(r, cl, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)]))
}

pub fn tensor_all(ms: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(1);
    for m in ms {
        acc = tensor(&acc, m)?;
    }
    Ok(acc)
}

pub fn tensor_vec(u: &[C64], v: &[C64]) -> CVector {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for a in u {
        for b in v {
            out.push(a * b);
        }
    }
    out
}

pub fn direct_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    direct_sum_all(&[a.clone(), b.clone()])
}

pub fn direct_sum_all(ms: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let r: usize = ms.iter().map(|m| m.rows()).sum();
    let cl: usize = ms.iter().map(|m| m.cols()).sum();
    check_dim(r.max(cl))?;
    let mut out = ComplexMatrix::zeros(r, cl);
    let (mut r0, mut c0) = (0, 0);
    for m in ms {
        out.set_block(r0, c0, m);
        r0 += m.rows();
        c0 += m.cols();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::c;

    #[test]
    fn partial_trace_of_product_and_bell() {
        let ra = ComplexMatrix::from_real_rows(&[&[0.7, 0.1], &[0.1, 0.3]]);
        let sb = ComplexMatrix::from_real_diag(&[0.2, 0.5, 0.3]);
        let p = tensor(&ra, &sb).unwrap();
        assert!(partial_trace(&p, &[2, 3], &[0]).unwrap().dist(&ra) < 1e-15);
        assert!(partial_trace(&p, &[2, 3], &[1]).unwrap().dist(&sb) < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = ComplexMatrix::projector(&[c(s, 0.0), C64::ZERO, C64::ZERO, c(s, 0.0)]);
        let r = partial_trace(&bell, &[2, 2], &[0]).unwrap();
        assert!(r.dist(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        let full = partial_trace(&p, &[2, 3], &[]).unwrap();
        assert_eq!((full.rows(), full.cols()), (1, 1));
        assert!((full[(0, 0)] - p.trace()).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_middle_factor() {
        let a = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        let b = ComplexMatrix::from_real_rows(&[&[1.0, 3.0], &[3.0, 5.0]]);
        let cc = ComplexMatrix::from_real_diag(&[7.0, 11.0]);
        let abc = tensor_all(&[a.clone(), b, cc.clone()]).unwrap();
        let r = partial_trace(&abc, &[2, 2, 2], &[2, 0]).unwrap();
        assert!(r.dist(&tensor(&a, &cc).unwrap().scale_real(6.0)) < 1e-13);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        assert!(partial_trace(&ComplexMatrix::identity(4), &[2, 3], &[0]).is_err());
    }

    #[test]
    fn ky_fan_examples() {
        let h = ComplexMatrix::from_real_diag(&[3.0, 1.0, 2.0]);
        assert!((ky_fan(&h, 2).unwrap() - 5.0).abs() < 1e-14);
        assert!((ky_fan(&h, 3).unwrap() - 6.0).abs() < 1e-14);
        assert!((ky_fan(&ComplexMatrix::identity(2).scale_real(2.0), 1).unwrap() - 2.0).abs() < 1e-14);
        assert!(ky_fan(&h, 0).is_err() && ky_fan(&h, 4).is_err());
    }

    #[test]
    fn schatten_examples() {
        let d = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        assert!((schatten_norm(&d, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((schatten_norm(&d, f64::INFINITY).unwrap() - 1.0).abs() < 1e-14);
        let i2 = ComplexMatrix::identity(2);
        assert!((schatten_norm(&i2, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!(schatten_norm(&i2, 0.5).is_err());
    }

    #[test]
    fn tensor_and_direct_sum_examples() {
        let t = tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)).unwrap();
        assert_eq!(t, ComplexMatrix::identity(6));
        let s = direct_sum(&ComplexMatrix::from_real_diag(&[1.0]), &ComplexMatrix::from_real_diag(&[2.0, 3.0])).unwrap();
        assert_eq!(s, ComplexMatrix::from_real_diag(&[1.0, 2.0, 3.0]));
    }

    #[test]
    fn tensor_cap_is_enforced() {
        let big = ComplexMatrix::zeros(65, 1);
        assert!(matches!(tensor(&big, &big), Err(Error::TooLarge { .. })));
    }
}
