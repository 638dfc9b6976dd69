//! Quantization distortion against codebook size.

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    distortion_bound, quantize_random_codebook, sample_min_distortion, sample_uniform_subspace, DistortionBoundParams,
    DEFAULT_BOUND_EXPONENT,
};
use crate::rng::{purpose, substream};

use super::config::Quantizer;

const SWEEP_TAG: u64 = 0x5357_4550;
const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionPoint {
    pub bits: u32,
    /// `RvqExplicit`, or `RvqStatistical` above the explicit cap.
    pub mode: Quantizer,
    pub trials: usize,
    pub mean: f64,
    pub std_err: f64,
    pub bound_leading: f64,
    /// Leading plus tail term at the default exponent.
    pub bound_full: f64,
}

/// Mean squared chordal distance from a uniform direction to its best
/// codeword, for each bit count. Deterministic in `seed` whatever the
/// thread count.
pub fn distortion_sweep(
    m: usize,
    n: usize,
    bits: &[u32],
    trials: usize,
    seed: u64,
    explicit_cap: u32,
    strict: bool,
) -> Result<Vec<DistortionPoint>> {
    if trials < 2 {
        return Err(Error::Config("a distortion sweep needs at least two trials".into()));
    }
    let mut out = Vec::with_capacity(bits.len());
    for &b in bits {
        let params = DistortionBoundParams::with_exponent(m, n, b as f64, DEFAULT_BOUND_EXPONENT)?;
        let mode = if b > explicit_cap {
            let msg = format!("{b} bits exceed the explicit cap of {explicit_cap}");
            if strict {
                return Err(Error::Config(msg));
            }
            warn!("{msg}; sampling the best-codeword distortion law instead");
            Quantizer::RvqStatistical
        } else {
            Quantizer::RvqExplicit
        };
        let draw = |t: usize| -> Result<f64> {
            match mode {
                Quantizer::RvqStatistical => {
                    let mut rng = substream(seed, &[SWEEP_TAG, purpose::ERROR, b as u64, t as u64]);
                    sample_min_distortion(m, n, b, &mut rng)
                }
                _ => {
                    let mut rng = substream(seed, &[SWEEP_TAG, purpose::CHANNEL, t as u64]);
                    let h = sample_uniform_subspace(m, n, &mut rng)?;
                    let mut rng = substream(seed, &[SWEEP_TAG, purpose::CODEBOOK, b as u64, t as u64]);
                    Ok(quantize_random_codebook(&h, b, &mut rng)?.distortion)
                }
            }
        };
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        let mut start = 0;
        while start < trials {
            let end = (start + CHUNK).min(trials);
            let chunk: Vec<f64> = (start..end).into_par_iter().map(draw).collect::<Result<_>>()?;
            for d in chunk {
                sum += d;
                sum_sq += d * d;
            }
            start = end;
        }
        let count = trials as f64;
        let mean = sum / count;
        let var = ((sum_sq - count * mean * mean) / (count - 1.0)).max(0.0);
        let bound = distortion_bound(&params)?;
        out.push(DistortionPoint {
            bits: b,
            mode,
            trials,
            mean,
            std_err: (var / count).sqrt(),
            bound_leading: bound.leading,
            bound_full: bound.full(),
        });
    }
    Ok(out)
}
