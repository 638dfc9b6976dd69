//! Low-complexity scalar quantization of channel directions.
//!
//! The channel is normalised so that `n` reference rows form the identity;
//! every other entry is then sent as a uniformly quantized phase on
//! `[−π, π]` and a uniformly quantized `atan` of its magnitude on
//! `[0, π/2]`, both reconstructed at bin centres.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex;
use rand::Rng;

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::geometry::SubspacePoint;
use crate::linalg::CMatrix;
use crate::scalar::Real;

/// How the reference rows (the divisor) are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceMode {
    /// The rows with the largest square minor; for a vector, its largest entry.
    #[default]
    Largest,
    /// The first `n` rows, falling back to pivoting when they are singular.
    Leading,
}

/// Per-entry bit allocation of the scalar quantizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarCodec {
    pub m: usize,
    pub n: usize,
    pub total_bits: u32,
    /// Bits for the phase of each quantized entry.
    pub phase_bits: Vec<u32>,
    /// Bits for the `atan`-magnitude of each quantized entry.
    pub magnitude_bits: Vec<u32>,
    pub reference: ReferenceMode,
}

impl ScalarCodec {
    /// Number of quantized complex entries, `(m − n)·n`.
    pub fn entries(&self) -> usize {
        (self.m - self.n) * self.n
    }

    /// Bits needed to signal which rows served as reference, not included
    /// in `total_bits`.
    pub fn reference_overhead_bits(&self) -> f64 {
        match self.reference {
            ReferenceMode::Largest => log2_binomial(self.m, self.n),
            ReferenceMode::Leading => 0.0,
        }
    }
}

fn log2_binomial(m: usize, n: usize) -> f64 {
    (0..n).map(|i| ((m - i) as f64 / (i + 1) as f64).log2()).sum()
}

/// Split `total_bits` as evenly as possible over every phase and magnitude.
///
/// The `r` bits left over after the even split go to `r` distinct slots
/// drawn from `rng`; the choice is frozen in the returned codec.
pub fn allocate_bits<R: Rng + ?Sized>(m: usize, n: usize, total_bits: u32, rng: &mut R) -> Result<ScalarCodec> {
    allocate_bits_with(m, n, total_bits, ReferenceMode::default(), rng)
}

pub fn allocate_bits_with<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    total_bits: u32,
    reference: ReferenceMode,
    rng: &mut R,
) -> Result<ScalarCodec> {
    if n == 0 || m <= n {
        return Err(Error::Dimension(format!("need m > n >= 1, got m={m}, n={n}")));
    }
    let entries = (m - n) * n;
    let slots = 2 * entries;
    let base = total_bits / slots as u32;
    let leftover = (total_bits % slots as u32) as usize;
    let mut bits = vec![base; slots];
    for s in rand::seq::index::sample(rng, slots, leftover) {
        bits[s] += 1;
    }
    let magnitude_bits = bits.split_off(entries);
    Ok(ScalarCodec {
        m,
        n,
        total_bits,
        phase_bits: bits,
        magnitude_bits,
        reference,
    })
}

/// Bin-centre reconstruction of `x` on a `bits`-bit uniform grid over `[lo, hi]`.
fn uniform_quantize(x: f64, lo: f64, hi: f64, bits: u32) -> f64 {
    let levels = (bits as f64).exp2();
    let width = (hi - lo) / levels;
    let idx = ((x - lo) / width).floor().clamp(0.0, levels - 1.0);
    lo + (idx + 0.5) * width
}

fn quantize_entry<T: Real>(z: Complex<T>, phase_bits: u32, magnitude_bits: u32) -> Complex<T> {
    let phase = uniform_quantize(z.arg().as_f64(), -PI, PI, phase_bits);
    let angle = uniform_quantize(z.norm().as_f64().atan(), 0.0, FRAC_PI_2, magnitude_bits);
    Complex::from_polar(T::of(angle.tan()), T::of(phase))
}

fn check_codec<T: Real>(hc: &ChannelMatrix<T>, codec: &ScalarCodec) -> Result<()> {
    if hc.m() != codec.m || hc.n() != codec.n {
        return Err(Error::DimensionMismatch {
            expected: (codec.m, codec.n),
            actual: (hc.m(), hc.n()),
        });
    }
    Ok(())
}

/// The `n` rows whose square block has the largest `|det|`; for a vector
/// this is its largest entry. Unlike greedy pivoting the choice depends
/// only on the column span.
fn largest_minor_rows<T: Real>(h: &CMatrix<T>) -> Option<Vec<usize>> {
    let (m, n) = h.shape();
    let mut rows: Vec<usize> = (0..n).collect();
    let mut best: Option<(T, Vec<usize>)> = None;
    loop {
        let vol = h.select_rows(&rows).abs_det();
        if best.as_ref().is_none_or(|b| vol > b.0) {
            best = Some((vol, rows.clone()));
        }
        // next combination in lexicographic order
        let Some(i) = (0..n).rev().find(|&i| rows[i] < m - n + i) else {
            break;
        };
        rows[i] += 1;
        for j in i + 1..n {
            rows[j] = rows[j - 1] + 1;
        }
    }
    let (vol, rows) = best?;
    let scale = h.frobenius_norm().powi(n as i32);
    (vol > T::epsilon() * scale).then_some(rows)
}

fn reference_rows<T: Real>(h: &CMatrix<T>, mode: ReferenceMode) -> Result<(Vec<usize>, CMatrix<T>)> {
    let n = h.cols();
    if mode == ReferenceMode::Leading {
        let rows: Vec<usize> = (0..n).collect();
        if let Some(inv) = h.select_rows(&rows).inverse() {
            return Ok((rows, inv));
        }
    }
    let rows = largest_minor_rows(h).ok_or_else(|| Error::DegenerateChannel(0.0))?;
    let inv = h
        .select_rows(&rows)
        .inverse()
        .ok_or_else(|| Error::DegenerateChannel(0.0))?;
    Ok((rows, inv))
}

/// Scalar-quantize a MISO channel vector (`n = 1`).
pub fn quantize_miso<T: Real>(hc: &ChannelMatrix<T>, codec: &ScalarCodec) -> Result<SubspacePoint<T>> {
    check_codec(hc, codec)?;
    if codec.n != 1 {
        return Err(Error::Dimension(format!("MISO quantizer needs n = 1, got {}", codec.n)));
    }
    let h = &hc.h;
    let largest = (0..codec.m)
        .map(|r| (r, h[(r, 0)].norm()))
        .fold((0, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
    if largest.1 == T::zero() {
        return Err(Error::DegenerateChannel(0.0));
    }
    let reference = match codec.reference {
        ReferenceMode::Leading if h[(0, 0)].norm() > T::zero() => 0,
        _ => largest.0,
    };
    let divisor = h[(reference, 0)];
    let mut out = CMatrix::zeros(codec.m, 1);
    let mut e = 0;
    for r in 0..codec.m {
        out[(r, 0)] = if r == reference {
            Complex::new(T::one(), T::zero())
        } else {
            let q = quantize_entry(h[(r, 0)] / divisor, codec.phase_bits[e], codec.magnitude_bits[e]);
            e += 1;
            q
        };
    }
    SubspacePoint::from_spanning(&out)
}

/// Scalar-quantize the span of an `m × n` channel.
///
/// `G = H·(H_ref)^{-1}` has the identity on the reference rows; the
/// remaining `(m − n)·n` entries of `G` are quantized and the result is
/// orthonormalised.
pub fn quantize_mimo<T: Real>(hc: &ChannelMatrix<T>, codec: &ScalarCodec) -> Result<SubspacePoint<T>> {
    check_codec(hc, codec)?;
    let (rows, inv) = reference_rows(&hc.h, codec.reference)?;
    let g = hc.h.mul(&inv);
    let mut out = CMatrix::zeros(codec.m, codec.n);
    let mut e = 0;
    for r in 0..codec.m {
        if let Some(pos) = rows.iter().position(|&x| x == r) {
            out[(r, pos)] = Complex::new(T::one(), T::zero());
            continue;
        }
        for c in 0..codec.n {
            out[(r, c)] = quantize_entry(g[(r, c)], codec.phase_bits[e], codec.magnitude_bits[e]);
            e += 1;
        }
    }
    SubspacePoint::from_spanning(&out)
}

/// Dispatch on `n`.
pub fn quantize_scalar<T: Real>(hc: &ChannelMatrix<T>, codec: &ScalarCodec) -> Result<SubspacePoint<T>> {
    if codec.n == 1 {
        quantize_miso(hc, codec)
    } else {
        quantize_mimo(hc, codec)
    }
}
