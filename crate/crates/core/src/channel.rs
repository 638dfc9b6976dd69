//! Block-fading Rayleigh channels.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::SubspacePoint;
use crate::linalg::CMatrix;
use crate::rng::{purpose, substream};
use crate::scalar::Real;

/// Smallest singular value a channel may have before it counts as rank deficient.
pub const DEGENERATE_SIGMA: f64 = 1e-12;

/// `m × n` channel from the transmitter to one user's `n` antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T> {
    pub h: CMatrix<T>,
    pub user_index: usize,
}

impl<T: Real> ChannelMatrix<T> {
    pub fn new(h: CMatrix<T>, user_index: usize) -> Self {
        Self { h, user_index }
    }

    pub fn m(&self) -> usize {
        self.h.rows()
    }

    pub fn n(&self) -> usize {
        self.h.cols()
    }
}

impl<T> AsRef<CMatrix<T>> for ChannelMatrix<T> {
    fn as_ref(&self) -> &CMatrix<T> {
        &self.h
    }
}

/// `H H^H = H̃ Λ H̃^H` restricted to the column span of `H`.
#[derive(Debug, Clone)]
pub struct ChannelFactorization<T> {
    /// Orthonormal basis of `span(H)`.
    pub h_tilde: SubspacePoint<T>,
    /// Nonzero eigenvalues of `H H^H`, paired with the columns of `h_tilde`.
    pub lambda: Vec<T>,
}

/// Fresh channel with i.i.d. unit-variance circularly-symmetric Gaussian entries.
pub fn sample_channel<T: Real, R: Rng + ?Sized>(m: usize, n: usize, user_index: usize, rng: &mut R) -> Result<ChannelMatrix<T>> {
    if n == 0 || m < n {
        return Err(Error::Dimension(format!("need m >= n >= 1, got m={m}, n={n}")));
    }
    Ok(ChannelMatrix::new(CMatrix::gaussian(m, n, rng), user_index))
}

/// Split a channel into its direction and its eigenvalues.
///
/// The eigenvalues come out in the order the Jacobi sweep leaves them; no
/// sorting is implied.
pub fn factorize<T: Real>(hc: &ChannelMatrix<T>) -> Result<ChannelFactorization<T>> {
    let gram = hc.h.adjoint_mul(&hc.h);
    let (lambda, u) = gram.hermitian_eigen();
    let min = lambda.iter().copied().fold(T::infinity(), T::min);
    let threshold = T::of(DEGENERATE_SIGMA).max(T::epsilon() * T::of(10.0) * hc.h.frobenius_norm());
    if !(min > T::zero()) || min.sqrt() < threshold {
        return Err(Error::DegenerateChannel(min.max(T::zero()).sqrt().as_f64()));
    }
    let mut basis = hc.h.mul(&u);
    for (j, &l) in lambda.iter().enumerate() {
        let inv = T::one() / l.sqrt();
        for z in basis.col_mut(j) {
            *z = z.scale(inv);
        }
    }
    Ok(ChannelFactorization {
        h_tilde: SubspacePoint::from_basis_unchecked(basis),
        lambda,
    })
}

/// One user's channel for a given trial, redrawn on the rare degenerate draw.
#[derive(Debug, Clone)]
pub struct UserChannel<T> {
    pub channel: ChannelMatrix<T>,
    pub factorization: ChannelFactorization<T>,
    /// How many degenerate draws were discarded.
    pub resamples: u32,
}

/// Draw user `user`'s channel for trial `trial` from its own substream.
pub fn draw_user_channel<T: Real>(m: usize, n: usize, seed: u64, trial: u64, user: usize) -> Result<UserChannel<T>> {
    let mut rng = substream(seed, &[purpose::CHANNEL, trial, user as u64]);
    let mut resamples = 0;
    loop {
        let channel = sample_channel(m, n, user, &mut rng)?;
        match factorize(&channel) {
            Ok(factorization) => {
                return Ok(UserChannel {
                    channel,
                    factorization,
                    resamples,
                })
            }
            Err(Error::DegenerateChannel(_)) if resamples < 1000 => resamples += 1,
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_gram_eigenvalues() {
        let h = CMatrix::from_real_rows(3, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let f = factorize(&ChannelMatrix::new(h, 0)).unwrap();
        let mut l = f.lambda.clone();
        l.sort_by(f64::total_cmp);
        assert!((l[0] - 4.0).abs() < 1e-12 && (l[1] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn factorization_reconstructs_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let hc: ChannelMatrix<f64> = sample_channel(6, 3, 0, &mut rng).unwrap();
            let f = factorize(&hc).unwrap();
            assert!(f.h_tilde.basis().orthonormality_error() < 1e-10);
            let l = CMatrix::from_fn(3, 3, |r, c| {
                if r == c {
                    Complex::new(f.lambda[r], 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                }
            });
            let rec = f.h_tilde.basis().mul(&l).mul_adjoint(f.h_tilde.basis());
            let hh = hc.h.mul_adjoint(&hc.h);
            assert!(rec.sub(&hh).frobenius_norm() <= 1e-8 * hh.frobenius_norm());
        }
    }

    #[test]
    fn rank_deficient_channel_is_rejected() {
        let h = CMatrix::from_real_rows(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(factorize(&ChannelMatrix::new(h, 0)), Err(Error::DegenerateChannel(_))));
    }

    #[test]
    fn draws_are_reproducible() {
        let a: UserChannel<f64> = draw_user_channel(4, 2, 5, 17, 1).unwrap();
        let b: UserChannel<f64> = draw_user_channel(4, 2, 5, 17, 1).unwrap();
        assert_eq!(a.channel, b.channel);
        let c: UserChannel<f64> = draw_user_channel(4, 2, 5, 17, 0).unwrap();
        assert_ne!(a.channel, c.channel);
        assert_eq!(a.resamples, 0);
    }

    #[test]
    fn bad_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_channel::<f64, _>(2, 3, 0, &mut rng).is_err());
        assert!(sample_channel::<f64, _>(2, 0, 0, &mut rng).is_err());
    }
}
