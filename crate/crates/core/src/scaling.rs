//! Feedback-bit scaling laws and the BD/ZF bit comparison.
//!
//! All outputs are real-valued bit counts; rounding is left to the caller.

use crate::error::{Error, Result};
use crate::geometry::{c_mn, distortion_bound, distortion_bound_leading, DistortionBoundParams};
use crate::precoding::Scheme;
use crate::rate::rate_loss_bound;

/// dB slope used by the closed-form laws (one doubling of power per 3 dB).
const DB_PER_DOUBLING: f64 = 3.0;

/// Tolerance of the bisection in [`bits_for_rate_loss_exact`], in bits.
pub const EXACT_SOLVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingQuery {
    pub m: usize,
    pub n: usize,
    pub p_db: f64,
    /// Allowed per-user rate loss is `log2(b_target)`; must exceed 1.
    pub b_target: f64,
    pub scheme: Scheme,
}

impl ScalingQuery {
    pub fn bd(m: usize, n: usize, p_db: f64, b_target: f64) -> Self {
        Self {
            m,
            n,
            p_db,
            b_target,
            scheme: Scheme::Bd,
        }
    }

    /// Dimensions the law is evaluated on. ZF on `K` users with `n`
    /// antennas behaves like `m` single-antenna users.
    fn effective_dims(&self) -> (usize, usize) {
        match self.scheme {
            Scheme::Bd => (self.m, self.n),
            Scheme::Zf => (self.m, 1),
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.p_db.is_finite() {
            return Err(Error::Parameter(format!("SNR must be finite, got {}", self.p_db)));
        }
        if !(self.b_target > 1.0) {
            return Err(Error::Parameter(format!("rate-loss factor b must exceed 1, got {}", self.b_target)));
        }
        let (m, n) = self.effective_dims();
        if n == 0 || m <= n {
            return Err(Error::Dimension(format!("need m > n >= 1, got m={m}, n={n}")));
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Closed-form bits per user that keep the per-user rate loss below `log2 b`.
///
/// `T/3·P_dB − T·log2(b^(1/n) − 1) + T·log2(Γ(1/T)/T) − log2 C_MN` with
/// `T = n(m − n)`; the distortion tail term is neglected.
pub fn bits_for_rate_loss(q: &ScalingQuery) -> Result<f64> {
    q.validate()?;
    let (m, n) = q.effective_dims();
    let t = (n * (m - n)) as f64;
    let per_stream = q.b_target.powf(1.0 / n as f64) - 1.0;
    Ok(t / DB_PER_DOUBLING * q.p_db - t * per_stream.log2() + t * (libm::tgamma(1.0 / t) / t).log2()
        - c_mn(m, n)?.log2())
}

/// Which distortion bound the exact solve inverts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactTarget {
    /// Leading term only.
    Leading,
    /// Leading plus tail term with the given exponent `a`.
    Full { a: f64 },
}

/// Bits per user solving `n·log2(1 + P·D̄(B)) = log2 b` numerically.
///
/// Uses exact `P = 10^(P_dB/10)` and bisection to [`EXACT_SOLVE_TOL`].
pub fn bits_for_rate_loss_exact(q: &ScalingQuery, target: ExactTarget) -> Result<f64> {
    q.validate()?;
    let (m, n) = q.effective_dims();
    if let ExactTarget::Full { a } = target {
        DistortionBoundParams::with_exponent(m, n, 0.0, a)?;
    }
    let power = db_to_linear(q.p_db);
    let goal = q.b_target.log2();
    let excess = |bits: f64| -> f64 {
        let d = match target {
            ExactTarget::Leading => distortion_bound_leading(m, n, bits).expect("validated dims"),
            ExactTarget::Full { a } => {
                let p = DistortionBoundParams { m, n, bits, a };
                distortion_bound(&p).map(|b| b.full()).unwrap_or(f64::INFINITY)
            }
        };
        rate_loss_bound(n, power, d) - goal
    };
    // the bound decreases in B; bits below zero are allowed
    let (mut lo, mut hi) = (-1.0, 1.0);
    while excess(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Parameter("no finite bit count meets the target".into()));
        }
    }
    while excess(lo) < 0.0 {
        lo *= 2.0;
        if lo < -1e6 {
            return Ok(lo);
        }
    }
    while hi - lo > EXACT_SOLVE_TOL {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Bits per user for BD to stay within 3 dB of perfect channel knowledge.
pub fn bits_3db_bd(m: usize, n: usize, p_db: f64) -> Result<f64> {
    let t = (n * m.checked_sub(n).filter(|&d| d > 0 && n > 0).ok_or_else(|| {
        Error::Dimension(format!("need m > n >= 1, got m={m}, n={n}"))
    })?) as f64;
    Ok(t / DB_PER_DOUBLING * p_db - c_mn(m, n)?.log2())
}

/// Bits per single-antenna user for ZF to stay within 3 dB of perfect channel knowledge.
pub fn bits_3db_zf(m: usize, p_db: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Dimension(format!("need m >= 2, got {m}")));
    }
    Ok((m - 1) as f64 / DB_PER_DOUBLING * p_db)
}

/// High-SNR sum-rate advantage of BD over ZF: `K·log2(e)·Σ_{j=1..n} (n−j)/j`.
pub fn bd_zf_rate_gap(m: usize, n: usize, k: usize) -> Result<f64> {
    if n == 0 || k * n != m {
        return Err(Error::Dimension(format!("need K·n = m, got K={k}, n={n}, m={m}")));
    }
    let harmonic: f64 = (1..=n).map(|j| (n - j) as f64 / j as f64).sum();
    Ok(k as f64 * std::f64::consts::LOG2_E * harmonic)
}

/// Total feedback bits each scheme needs to reach the same sum rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitComparison {
    /// `n` single-antenna ZF users' worth of bits for one BD user.
    pub zf_bits: f64,
    pub bd_bits: f64,
    /// BD-over-ZF rate gap per user at perfect channel knowledge.
    pub rate_gap_per_user: f64,
    /// Rate-loss factor handed to the BD law, `2^(gap + R)`.
    pub b_target: f64,
    /// `100 · (1 − bd_bits / zf_bits)`.
    pub savings_percent: f64,
}

/// Compare sufficient bits for BD and ZF at a common target sum rate.
///
/// ZF is allowed a per-user loss of `r_target` bits; BD may lose the ZF
/// loss plus the perfect-CSIT gap between the two schemes.
pub fn compare_bd_zf_bits(m: usize, n: usize, p_db: f64, r_target: f64) -> Result<BitComparison> {
    if !(r_target > 0.0) {
        return Err(Error::Parameter(format!("target rate loss must be positive, got {r_target}")));
    }
    if n == 0 || m % n != 0 {
        return Err(Error::Dimension(format!("n={n} must divide m={m}")));
    }
    let k = m / n;
    let rate_gap_per_user = bd_zf_rate_gap(m, n, k)? / k as f64;
    let zf_bits = n as f64 * bits_3db_zf(m, p_db)?;
    if n == 1 {
        return Ok(BitComparison {
            zf_bits,
            bd_bits: zf_bits,
            rate_gap_per_user,
            b_target: 2f64.powf(r_target),
            savings_percent: 0.0,
        });
    }
    let b_target = 2f64.powf(rate_gap_per_user + r_target);
    let bd_bits = bits_for_rate_loss(&ScalingQuery::bd(m, n, p_db, b_target))?;
    Ok(BitComparison {
        zf_bits,
        bd_bits,
        rate_gap_per_user,
        b_target,
        savings_percent: 100.0 * (1.0 - bd_bits / zf_bits),
    })
}
