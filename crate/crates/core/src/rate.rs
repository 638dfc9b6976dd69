//! Per-user throughput under perfect and quantized channel knowledge.
//!
//! All determinants are `log2 det(I_N + c·G)` of an `N × N` Gram matrix `G`,
//! evaluated through the eigenvalues of `G`. The transmit scaling `c` is
//! `P/K` throughout: each user gets an equal share of the power and its
//! streams carry unit-variance symbols.

use crate::channel::{ChannelFactorization, ChannelMatrix};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::precoding::PrecoderSet;
use crate::scalar::Real;

/// `log2 det(I + scale·G)` for Hermitian positive semidefinite `G`.
pub fn log2_det_shifted<T: Real>(gram: &CMatrix<T>, scale: T) -> T {
    log2_det_from_eigenvalues(&gram.hermitian_eigenvalues(), scale)
}

fn log2_det_from_eigenvalues<T: Real>(eigs: &[T], scale: T) -> T {
    let sum = eigs
        .iter()
        .fold(T::zero(), |acc, &mu| acc + (scale * mu.max(T::zero())).ln_1p());
    sum * T::LOG2_E()
}

/// `(H^H V)(H^H V)^H`, i.e. `H^H V V^H H`.
fn received_gram<T: Real>(h: &CMatrix<T>, v: &CMatrix<T>) -> CMatrix<T> {
    let hv = h.adjoint_mul(v);
    hv.mul_adjoint(&hv)
}

/// Rate of one user whose precoder nulls all interference.
pub fn user_rate_perfect<T: Real>(hc: &ChannelMatrix<T>, v: &CMatrix<T>, power: T, users: usize) -> T {
    let scale = power / T::of(users as f64);
    log2_det_shifted(&received_gram(&hc.h, v), scale)
}

/// One user's throughput split into its two determinant terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample<T> {
    pub user_index: usize,
    /// `signal_term − interference_term`.
    pub per_user_rate: T,
    /// `log2 det(I + (P/K) Σ_j H^H V_j V_j^H H)`.
    pub signal_term: T,
    /// `log2 det(I + (P/K) Σ_{j≠i} H^H V_j V_j^H H)`.
    pub interference_term: T,
}

/// The two Gram spectra behind a user's rate; evaluating several powers
/// reuses them.
#[derive(Debug, Clone)]
pub struct RateSpectrum<T> {
    pub user_index: usize,
    users: usize,
    total: Vec<T>,
    interference: Vec<T>,
}

impl<T: Real> RateSpectrum<T> {
    pub fn new(hc: &ChannelMatrix<T>, precoders: &PrecoderSet<T>, user: usize) -> Result<Self> {
        let k = precoders.users();
        if user >= k {
            return Err(Error::Parameter(format!("user {user} out of range for {k} users")));
        }
        let n = hc.n();
        let mut own = CMatrix::zeros(n, n);
        let mut interference = CMatrix::zeros(n, n);
        for (j, v) in precoders.v.iter().enumerate() {
            if v.rows() != hc.m() {
                return Err(Error::DimensionMismatch {
                    expected: (hc.m(), v.cols()),
                    actual: v.shape(),
                });
            }
            let g = received_gram(&hc.h, v);
            if j == user {
                own = g;
            } else {
                interference = interference.add(&g);
            }
        }
        let total = own.add(&interference);
        Ok(Self {
            user_index: user,
            users: k,
            total: total.hermitian_eigenvalues(),
            interference: interference.hermitian_eigenvalues(),
        })
    }

    pub fn at_power(&self, power: T) -> RateSample<T> {
        let scale = power / T::of(self.users as f64);
        let signal_term = log2_det_from_eigenvalues(&self.total, scale);
        let interference_term = log2_det_from_eigenvalues(&self.interference, scale);
        RateSample {
            user_index: self.user_index,
            per_user_rate: (signal_term - interference_term).max(T::zero()),
            signal_term,
            interference_term,
        }
    }
}

/// Rate of user `user` when every precoder may leak into its channel.
pub fn user_rate_feedback<T: Real>(
    hc: &ChannelMatrix<T>,
    precoders: &PrecoderSet<T>,
    user: usize,
    power: T,
) -> Result<RateSample<T>> {
    Ok(RateSpectrum::new(hc, precoders, user)?.at_power(power))
}

/// Upper bound `n · log2(1 + P·D)` on the per-user rate loss from feedback.
pub fn rate_loss_bound(n: usize, power: f64, distortion: f64) -> f64 {
    n as f64 * (power * distortion).ln_1p() * std::f64::consts::LOG2_E
}

/// `H̃_i^H V_j V_j^H H̃_i` for a user `i` and an interfering precoder `j ≠ i`.
pub fn leakage_statistic<T: Real>(
    factorization: &ChannelFactorization<T>,
    precoders: &PrecoderSet<T>,
    user: usize,
    interferer: usize,
) -> Result<CMatrix<T>> {
    if user == interferer {
        return Err(Error::Parameter("leakage needs an interfering user distinct from the receiver".into()));
    }
    let v = precoders
        .v
        .get(interferer)
        .ok_or_else(|| Error::Parameter(format!("interferer {interferer} out of range")))?;
    Ok(received_gram(factorization.h_tilde.basis(), v))
}
