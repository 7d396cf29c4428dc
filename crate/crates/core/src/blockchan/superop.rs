use super::Channel;
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, check_dim, eig_hermitian, partial_trace, singular_values};

const CHANNEL_TOL: f64 = 1e-9;
const IDEMPOTENT_TOL: f64 = 1e-8;

/// A channel on `C^d` stored as its transfer matrix on row-major vectorized operators,
/// `vec(Φ(X)) = T vec(X)`, with the Choi matrix cached.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    transfer: ComplexMatrix,
    choi: ComplexMatrix,
}

fn choi_from_transfer(t: &ComplexMatrix, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |r, s| {
        let (i, a) = (r / d, r % d);
        let (j, b) = (s / d, s % d);
        t[(a * d + b, i * d + j)]
    })
}

fn transfer_from_choi(j: &ComplexMatrix, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |r, s| {
        let (a, b) = (r / d, r % d);
        let (i, jj) = (s / d, s % d);
        j[(i * d + a, jj * d + b)]
    })
}

fn isqrt_exact(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

impl Superoperator {
    /// Builds from a transfer matrix, checking complete positivity and trace preservation.
    pub fn from_transfer(transfer: ComplexMatrix) -> Result<Self> {
        let s = Self::from_transfer_unchecked(transfer)?;
        s.validate()?;
        Ok(s)
    }

    /// Builds without the CPTP check (for differences and intermediate algebra).
    pub fn from_transfer_unchecked(transfer: ComplexMatrix) -> Result<Self> {
        if !transfer.is_square() {
            return Err(Error::DimensionMismatch("transfer matrix must be square".into()));
        }
        let d = isqrt_exact(transfer.rows())
            .ok_or_else(|| Error::DimensionMismatch(format!("transfer side {} is not a square number", transfer.rows())))?;
        check_dim(d * d)?;
        let choi = choi_from_transfer(&transfer, d);
        Ok(Self { dim: d, transfer, choi })
    }

    pub fn from_choi(choi: ComplexMatrix) -> Result<Self> {
        if !choi.is_square() {
            return Err(Error::DimensionMismatch("Choi matrix must be square".into()));
        }
        let d = isqrt_exact(choi.rows())
            .ok_or_else(|| Error::DimensionMismatch(format!("Choi side {} is not a square number", choi.rows())))?;
        Self::from_transfer(transfer_from_choi(&choi, d))
    }

    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let d = kraus.first().map(|k| k.rows()).ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        check_dim(d * d)?;
        if kraus.iter().any(|k| k.rows() != d || k.cols() != d) {
            return Err(Error::DimensionMismatch("Kraus operators must all be d x d".into()));
        }
        let mut t = ComplexMatrix::zeros(d * d, d * d);
        for k in kraus {
            let kc = k.conj();
            for a in 0..d {
                for i in 0..d {
                    let kai = k[(a, i)];
                    if kai.norm() == 0.0 {
                        continue;
                    }
                    for b in 0..d {
                        for j in 0..d {
                            t[(a * d + b, i * d + j)] += kai * kc[(b, j)];
                        }
                    }
                }
            }
        }
        Self::from_transfer(t)
    }

    pub fn identity(d: usize) -> Self {
        Self::from_transfer_unchecked(ComplexMatrix::identity(d * d)).expect("identity transfer")
    }

    /// Dense representation of any square channel.
    pub fn from_channel(ch: &dyn Channel) -> Result<Self> {
        let d = ch.input_dim();
        if ch.output_dim() != d {
            return Err(Error::DimensionMismatch("superoperators are square".into()));
        }
        check_dim(d * d)?;
        let mut t = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let out = ch.apply_matrix(&ComplexMatrix::matrix_unit(d, i, j));
                for a in 0..d {
                    for b in 0..d {
                        t[(a * d + b, i * d + j)] = out[(a, b)];
                    }
                }
            }
        }
        Self::from_transfer_unchecked(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transfer(&self) -> &ComplexMatrix {
        &self.transfer
    }

    pub fn choi_matrix(&self) -> &ComplexMatrix {
        &self.choi
    }

    /// Smallest Choi eigenvalue and trace-preservation residual.
    pub fn cptp_residuals(&self) -> Result<(f64, f64)> {
        let e = eig_hermitian(&self.choi)?;
        let lmin = e.eigenvalues.last().copied().unwrap_or(0.0);
        let tr_out = partial_trace(&self.choi, &[self.dim, self.dim], &[0])?;
        Ok((lmin, tr_out.dist(&ComplexMatrix::identity(self.dim))))
    }

    pub fn validate(&self) -> Result<()> {
        let (lmin, tp) = self.cptp_residuals()?;
        if lmin < -CHANNEL_TOL * self.choi.norm_inf().max(1.0) {
            return Err(Error::InvalidChannel(format!("not completely positive: Choi eigenvalue {lmin:.3e}")));
        }
        if tp > CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!("not trace preserving: residual {tp:.3e}")));
        }
        Ok(())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("composition of channels on different spaces".into()));
        }
        Self::from_transfer_unchecked(&self.transfer * &other.transfer)
    }

    pub fn power(&self, n: u32) -> Superoperator {
        let mut t = ComplexMatrix::identity(self.dim * self.dim);
        let mut base = self.transfer.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                t = &t * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        Self::from_transfer_unchecked(t).expect("power of a square transfer matrix")
    }

    /// `self ⊗ other` on `C^{d1} ⊗ C^{d2}`.
    pub fn tensor(&self, other: &Superoperator) -> Result<Superoperator> {
        let (d1, d2) = (self.dim, other.dim);
        let d = d1 * d2;
        check_dim(d * d)?;
        let (t1, t2) = (&self.transfer, &other.transfer);
        let t = ComplexMatrix::from_fn(d * d, d * d, |r, s| {
            let (a, b) = (r / d, r % d);
            let (i, j) = (s / d, s % d);
            let (a1, a2, b1, b2) = (a / d2, a % d2, b / d2, b % d2);
            let (i1, i2, j1, j2) = (i / d2, i % d2, j / d2, j % d2);
            t1[(a1 * d1 + b1, i1 * d1 + j1)] * t2[(a2 * d2 + b2, i2 * d2 + j2)]
        });
        Self::from_transfer_unchecked(t)
    }

    pub fn tensor_power(&self, n: u32) -> Result<Superoperator> {
        let mut acc = self.clone();
        for _ in 1..n.max(1) {
            acc = acc.tensor(self)?;
        }
        Ok(acc)
    }

    /// `‖T² − T‖` in operator norm, compared against 1e-8.
    pub fn is_idempotent(&self) -> Result<(bool, f64)> {
        let t2 = &self.transfer * &self.transfer;
        let r = singular_values(&(&t2 - &self.transfer))?.first().copied().unwrap_or(0.0);
        Ok((r <= IDEMPOTENT_TOL, r))
    }

    pub fn sub(&self, other: &Superoperator) -> Result<Superoperator> {
        Self::from_transfer_unchecked(&self.transfer - &other.transfer)
    }

    pub fn affine(&self, other: &Superoperator, w: f64) -> Result<Superoperator> {
        Self::from_transfer_unchecked(&self.transfer.scale_real(w) + &other.transfer.scale_real(1.0 - w))
    }
}

impl Channel for Superoperator {
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn output_dim(&self) -> usize {
        self.dim
    }
    fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = self.transfer.apply(&x.vec());
        ComplexMatrix::unvec(&v, self.dim, self.dim)
    }
    fn adjoint_matrix(&self, y: &ComplexMatrix) -> ComplexMatrix {
        // Valid for Hermiticity-preserving maps, where the adjoint's transfer is T†.
        let v = self.transfer.adjoint().apply(&y.vec());
        ComplexMatrix::unvec(&v, self.dim, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockchan::choi;
    use crate::matcore::c;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub(crate) fn dephasing() -> Superoperator {
        Superoperator::from_kraus(&[
            ComplexMatrix::from_real_diag(&[1.0, 0.0]),
            ComplexMatrix::from_real_diag(&[0.0, 1.0]),
        ])
        .unwrap()
    }

    #[test]
    fn choi_round_trip_and_generic_choi_agree() {
        let s = dephasing();
        assert!(choi(&s).dist(s.choi_matrix()) < 1e-15);
        let back = Superoperator::from_choi(s.choi_matrix().clone()).unwrap();
        assert!(back.transfer().dist(s.transfer()) < 1e-15);
    }

    #[test]
    fn idempotency_examples() {
        assert!(dephasing().is_idempotent().unwrap().0);
        let x = Superoperator::from_kraus(&[pauli_x()]).unwrap();
        let (ok, r) = x.is_idempotent().unwrap();
        assert!(!ok && r > 1.0);
    }

    #[test]
    fn composition_matches_sequential_application() {
        let amp = Superoperator::from_kraus(&[
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.6]]),
            ComplexMatrix::from_real_rows(&[&[0.0, 0.8], &[0.0, 0.0]]),
        ])
        .unwrap();
        let comp = amp.compose(&dephasing()).unwrap();
        let x = ComplexMatrix::from_fn(2, 2, |i, j| c(1.0 + i as f64, j as f64 - 0.5));
        let seq = amp.apply_matrix(&dephasing().apply_matrix(&x));
        assert!(comp.apply_matrix(&x).dist(&seq) < 1e-14);
        assert!(choi(&comp).dist(comp.choi_matrix()) < 1e-14);
    }

    #[test]
    fn adjoint_relation() {
        let amp = Superoperator::from_kraus(&[
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.6]]),
            ComplexMatrix::from_real_rows(&[&[0.0, 0.8], &[0.0, 0.0]]),
        ])
        .unwrap();
        let x = ComplexMatrix::from_fn(2, 2, |i, j| c(0.3 * i as f64 + 0.1, 0.7 * j as f64));
        let y = ComplexMatrix::from_fn(2, 2, |i, j| c(j as f64 - 0.2, 0.4 * i as f64 + 0.9));
        let lhs = y.trace_product(&amp.apply_matrix(&x));
        let rhs = amp.adjoint_matrix(&y).trace_product(&x);
        assert!((lhs - rhs).norm() < 1e-14);
        assert!(amp.adjoint_matrix(&ComplexMatrix::identity(2)).dist(&ComplexMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn rejects_non_channels() {
        let t = ComplexMatrix::identity(4).scale_real(2.0);
        assert!(Superoperator::from_transfer(t).is_err());
        assert!(Superoperator::from_transfer(ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn tensor_product_acts_on_product_operators() {
        let a = dephasing();
        let b = Superoperator::from_kraus(&[pauli_x()]).unwrap();
        let ab = a.tensor(&b).unwrap();
        let x = ComplexMatrix::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64));
        let y = ComplexMatrix::from_fn(2, 2, |i, j| c(j as f64 * 2.0, i as f64 - 1.0));
        let lhs = ab.apply_matrix(&crate::matcore::tensor(&x, &y).unwrap());
        let rhs = crate::matcore::tensor(&a.apply_matrix(&x), &b.apply_matrix(&y)).unwrap();
        assert!(lhs.dist(&rhs) < 1e-14);
        assert!(ab.validate().is_ok());
    }
}
