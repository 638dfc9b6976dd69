//! Monte Carlo scenarios: configuration, the trial loop, and result files.
//!
//! Every trial draws all users' channels from their own random substreams,
//! quantizes them once per distinct bit count on the SNR grid, and
//! evaluates the resulting precoders at every grid power. Trials run in
//! parallel in fixed-size chunks and are folded in trial order, so results
//! do not depend on the number of worker threads.

mod config;
mod gap;
mod records;
mod sweep;

use std::collections::HashMap;

use log::{debug, warn};
use rayon::prelude::*;

use crate::channel::{draw_user_channel, ChannelMatrix, UserChannel};
use crate::error::{Error, Result};
use crate::geometry::{
    apply_quantization_error, chordal_distance_sqr, distortion_bound, haar_unitary, quantize,
    quantize_random_codebook, sample_min_distortion, Codebook, DistortionBoundParams, SubspacePoint,
};
use crate::linalg::CMatrix;
use crate::precoding::{bd_precoders, bd_precoders_rank_tolerant, zf_precoders, PrecoderSet, Scheme};
use crate::rate::{leakage_statistic, rate_loss_bound, RateSpectrum};
use crate::rng::{purpose, substream};
use crate::scalar_quant::{allocate_bits_with, quantize_scalar, ScalarCodec};
use crate::scaling::db_to_linear;

pub use config::{parse_grid, BitRule, Quantizer, ScenarioConfig, DEFAULT_EXPLICIT_CAP, DEFAULT_TRIALS};
pub use gap::{measure_snr_gap, SnrGap};
pub use records::{read_records, read_results, write_records, write_results, RateRecord, CSV_COLUMNS};
pub use sweep::{distortion_sweep, DistortionPoint};

const CHUNK: usize = 256;

/// Mean and standard error of a per-trial quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Running {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn estimate(&self) -> Estimate {
        let std_err = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean: self.mean,
            std_err,
        }
    }
}

/// Everything measured at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub snr_db: f64,
    pub bits: u32,
    /// Quantizer used here; differs from the configured one when an explicit
    /// codebook was too large.
    pub quantizer: Quantizer,
    pub sum_rate: Estimate,
    pub perfect_sum_rate: Estimate,
    /// Per-user loss against perfect channel knowledge.
    pub rate_loss: Estimate,
    /// Squared chordal distance between each channel and its feedback.
    pub distortion: Estimate,
    /// `trace(H̃_i^H V_j V_j^H H̃_i)` averaged over ordered user pairs.
    pub leakage_trace: Estimate,
    pub leakage_samples: usize,
    /// Largest `‖H_i^H V_j‖_F`, `i ≠ j`, seen under perfect channel knowledge.
    pub max_perfect_interference: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub records: Vec<RateRecord>,
    pub points: Vec<PointStats>,
    /// Degenerate channel draws that were redrawn plus precoder designs
    /// that needed the rank-tolerant fallback.
    pub degenerate_events: u64,
}

/// Run on the global thread pool.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let plan = Plan::new(cfg)?;
    plan.run()
}

/// Run on a dedicated pool of `threads` workers (0 picks the default).
pub fn run_scenario_with_threads(cfg: &ScenarioConfig, threads: usize) -> Result<ScenarioResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    let plan = Plan::new(cfg)?;
    pool.install(|| plan.run())
}

struct PointPlan {
    snr_db: f64,
    power: f64,
    bits: u32,
    quantizer: Quantizer,
    /// Index into `Plan::keys`.
    key: usize,
}

/// Fixed per-user state shared by all trials.
#[derive(Default)]
struct Frozen {
    codebooks: HashMap<(u32, usize), Codebook<f64>>,
    codecs: HashMap<(u32, usize), ScalarCodec>,
}

struct Plan<'a> {
    cfg: &'a ScenarioConfig,
    points: Vec<PointPlan>,
    /// Distinct `(quantizer, bits)` pairs on the grid.
    keys: Vec<(Quantizer, u32)>,
    frozen: Frozen,
}

/// One trial's contribution to one point.
#[derive(Debug, Clone, Copy, Default)]
struct Sample {
    sum_rate: f64,
    perfect_sum_rate: f64,
    distortion: f64,
    leakage: f64,
}

struct TrialOutput {
    samples: Vec<Sample>,
    max_interference: f64,
    redraws: u64,
}

/// Feedback directions, one per quantized unit (user for BD, antenna for ZF).
struct Feedback {
    points: Vec<SubspacePoint<f64>>,
    distortion: f64,
}

impl<'a> Plan<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let mut points = Vec::with_capacity(cfg.snr_grid_db.len());
        let mut keys: Vec<(Quantizer, u32)> = Vec::new();
        for (i, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
            let bits = if cfg.quantizer == Quantizer::Perfect {
                0
            } else {
                cfg.bit_rule.bits(cfg.m, cfg.n, snr_db, i)?
            };
            let mut quantizer = cfg.quantizer;
            if quantizer == Quantizer::RvqExplicit && unit_bits(cfg, bits) > cfg.explicit_cap {
                let msg = format!(
                    "{} bits per codebook exceed the explicit cap of {} at {snr_db} dB",
                    unit_bits(cfg, bits),
                    cfg.explicit_cap
                );
                if cfg.strict || cfg.fixed_codebook {
                    return Err(Error::Config(msg));
                }
                let (m, n) = unit_dims(cfg);
                if m < 2 * n {
                    return Err(Error::Config(format!("{msg}; the statistical mode needs m >= 2n")));
                }
                warn!("{msg}; switching to rvq_statistical");
                quantizer = Quantizer::RvqStatistical;
            }
            let key = match keys.iter().position(|&k| k == (quantizer, bits)) {
                Some(k) => k,
                None => {
                    keys.push((quantizer, bits));
                    keys.len() - 1
                }
            };
            points.push(PointPlan {
                snr_db,
                power: db_to_linear(snr_db),
                bits,
                quantizer,
                key,
            });
        }
        let mut plan = Self {
            cfg,
            points,
            keys,
            frozen: Frozen::default(),
        };
        plan.freeze()?;
        Ok(plan)
    }

    /// Build the fixed codebooks and scalar bit allocations.
    fn freeze(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let (m, n) = unit_dims(cfg);
        for &(q, bits) in &self.keys {
            let b = unit_bits(cfg, bits);
            for unit in 0..units(cfg) {
                match q {
                    Quantizer::RvqExplicit if cfg.fixed_codebook => {
                        let mut rng = substream(cfg.seed, &[purpose::FIXED_CODEBOOK, b as u64, unit as u64]);
                        self.frozen
                            .codebooks
                            .insert((b, unit), Codebook::random(m, n, b, &mut rng)?);
                    }
                    Quantizer::Scalar => {
                        let mut payload = b;
                        let mut rng = substream(cfg.seed, &[purpose::ALLOCATION, b as u64, unit as u64]);
                        let probe = allocate_bits_with(m, n, 0, cfg.reference, &mut rng)?;
                        if cfg.count_reference_bits {
                            payload = payload.saturating_sub(probe.reference_overhead_bits().ceil() as u32);
                        }
                        let mut rng = substream(cfg.seed, &[purpose::ALLOCATION, b as u64, unit as u64]);
                        self.frozen
                            .codecs
                            .insert((b, unit), allocate_bits_with(m, n, payload, cfg.reference, &mut rng)?);
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn run(&self) -> Result<ScenarioResult> {
        let cfg = self.cfg;
        let np = self.points.len();
        let mut acc = vec![[Running::default(); 5]; np];
        let mut max_interference = 0f64;
        let mut redraws = 0u64;
        let mut start = 0;
        while start < cfg.trials {
            let end = (start + CHUNK).min(cfg.trials);
            let outputs: Vec<TrialOutput> = (start..end)
                .into_par_iter()
                .map(|t| self.trial(t as u64))
                .collect::<Result<_>>()?;
            for out in outputs {
                for (a, s) in acc.iter_mut().zip(&out.samples) {
                    a[0].push(s.sum_rate);
                    a[1].push(s.perfect_sum_rate);
                    a[2].push((s.perfect_sum_rate - s.sum_rate) / cfg.k as f64);
                    a[3].push(s.distortion);
                    a[4].push(s.leakage);
                }
                max_interference = max_interference.max(out.max_interference);
                redraws += out.redraws;
            }
            start = end;
        }
        if redraws > 0 {
            debug!("{redraws} degenerate channel or precoder events");
        }

        let leakage_samples = cfg.trials * cfg.k * (cfg.k - 1) * cfg.codebooks_per_trial;
        let mut points = Vec::with_capacity(np);
        let mut records = Vec::with_capacity(np);
        for (p, a) in self.points.iter().zip(&acc) {
            let stats = PointStats {
                snr_db: p.snr_db,
                bits: p.bits,
                quantizer: p.quantizer,
                sum_rate: a[0].estimate(),
                perfect_sum_rate: a[1].estimate(),
                rate_loss: a[2].estimate(),
                distortion: a[3].estimate(),
                leakage_trace: a[4].estimate(),
                leakage_samples,
                max_perfect_interference: max_interference,
            };
            records.push(self.record(p, &stats));
            points.push(stats);
        }
        Ok(ScenarioResult {
            config: cfg.clone(),
            records,
            points,
            degenerate_events: redraws,
        })
    }

    fn record(&self, p: &PointPlan, s: &PointStats) -> RateRecord {
        let cfg = self.cfg;
        let (m, n) = unit_dims(cfg);
        let distortion_bound = match p.quantizer {
            Quantizer::Perfect => 0.0,
            Quantizer::RvqExplicit | Quantizer::RvqStatistical => {
                DistortionBoundParams::with_exponent(m, n, unit_bits(cfg, p.bits) as f64, cfg.bound_exponent)
                    .and_then(|b| distortion_bound(&b))
                    .map_or(f64::NAN, |b| b.full())
            }
            Quantizer::Scalar => f64::NAN,
        };
        RateRecord {
            scenario_id: cfg.id.clone(),
            scheme: cfg.scheme,
            quantizer: p.quantizer,
            m: cfg.m,
            n: cfg.n,
            k: cfg.k,
            snr_db: p.snr_db,
            bits_per_user: p.bits,
            trials: cfg.trials,
            sum_rate: s.sum_rate.mean,
            per_user_rate: s.sum_rate.mean / cfg.k as f64,
            rate_loss: s.rate_loss.mean,
            theorem1_bound: rate_loss_bound(cfg.n, p.power, s.distortion.mean),
            empirical_distortion: s.distortion.mean,
            distortion_bound,
            std_err: s.sum_rate.std_err,
        }
    }

    fn trial(&self, t: u64) -> Result<TrialOutput> {
        let cfg = self.cfg;
        let mut redraws = 0u64;
        let users: Vec<UserChannel<f64>> = (0..cfg.k)
            .map(|u| draw_user_channel(cfg.m, cfg.n, cfg.seed, t, u))
            .collect::<Result<_>>()?;
        for u in &users {
            if u.resamples > 0 && cfg.strict {
                return Err(Error::DegenerateChannel(0.0));
            }
            redraws += u.resamples as u64;
        }
        let channels: Vec<&ChannelMatrix<f64>> = users.iter().map(|u| &u.channel).collect();

        let perfect = match cfg.scheme {
            Scheme::Bd => {
                let dirs: Vec<_> = users.iter().map(|u| u.factorization.h_tilde.clone()).collect();
                bd_precoders(&dirs, 1.0)?
            }
            Scheme::Zf => zf_precoders(&channels, 1.0)?,
        };
        let mut max_interference = 0f64;
        for (i, ch) in channels.iter().enumerate() {
            for (j, v) in perfect.v.iter().enumerate() {
                if i != j {
                    max_interference = max_interference.max(ch.h.adjoint_mul(v).frobenius_norm());
                }
            }
        }
        let perfect_spectra = spectra(&channels, &perfect)?;
        let perfect_leakage = mean_leakage(&users, &perfect)?;

        let mut samples = vec![Sample::default(); self.points.len()];
        for (ki, &(q, bits)) in self.keys.iter().enumerate() {
            let reps = if q == Quantizer::Perfect { 1 } else { cfg.codebooks_per_trial };
            let mut sums = vec![0.0; self.points.len()];
            let (mut distortion, mut leakage) = (0.0, 0.0);
            for rep in 0..reps {
                let (precoders, d, leak) = if q == Quantizer::Perfect {
                    (None, 0.0, perfect_leakage)
                } else {
                    let (p, d) = self.feedback_precoders(&users, q, bits, t, rep as u64, &mut redraws)?;
                    let leak = mean_leakage(&users, &p)?;
                    (Some(p), d, leak)
                };
                distortion += d;
                leakage += leak;
                let sp = match &precoders {
                    Some(p) => spectra(&channels, p)?,
                    None => perfect_spectra.clone(),
                };
                for (pi, point) in self.points.iter().enumerate().filter(|(_, p)| p.key == ki) {
                    sums[pi] += sp.iter().map(|s| s.at_power(point.power).per_user_rate).sum::<f64>();
                }
            }
            let r = reps as f64;
            for (pi, point) in self.points.iter().enumerate().filter(|(_, p)| p.key == ki) {
                samples[pi] = Sample {
                    sum_rate: sums[pi] / r,
                    perfect_sum_rate: perfect_spectra
                        .iter()
                        .map(|s| s.at_power(point.power).per_user_rate)
                        .sum(),
                    distortion: distortion / r,
                    leakage: leakage / r,
                };
            }
        }
        Ok(TrialOutput {
            samples,
            max_interference,
            redraws,
        })
    }

    /// Quantize every user and build precoders. Feedback that makes other
    /// users' directions linearly dependent falls back to the rank-tolerant
    /// BD design unless running strict.
    fn feedback_precoders(
        &self,
        users: &[UserChannel<f64>],
        q: Quantizer,
        bits: u32,
        t: u64,
        rep: u64,
        fallbacks: &mut u64,
    ) -> Result<(PrecoderSet<f64>, f64)> {
        let cfg = self.cfg;
        let fb = self.feedback(users, q, bits, t, rep)?;
        let built = match cfg.scheme {
            Scheme::Bd => bd_precoders(&fb.points, 1.0),
            Scheme::Zf => zf_precoders(&fb.points, 1.0).map(|p| group_beams(p, cfg.k, cfg.n)),
        };
        match built {
            Ok(p) => Ok((p, fb.distortion)),
            Err(Error::DegenerateInput(msg)) if !cfg.strict && cfg.scheme == Scheme::Bd => {
                debug!("trial {t}: {msg}; using rank-tolerant design");
                *fallbacks += 1;
                Ok((bd_precoders_rank_tolerant(&fb.points, 1.0)?, fb.distortion))
            }
            Err(Error::DegenerateInput(msg)) => Err(Error::DegenerateInput(format!("trial {t}: {msg}"))),
            Err(e) => Err(e),
        }
    }

    fn feedback(&self, users: &[UserChannel<f64>], q: Quantizer, bits: u32, t: u64, rep: u64) -> Result<Feedback> {
        let cfg = self.cfg;
        let b = unit_bits(cfg, bits);
        let mut points = Vec::with_capacity(units(cfg));
        let mut total = 0.0;
        for (u, user) in users.iter().enumerate() {
            let targets: Vec<(usize, SubspacePoint<f64>, ChannelMatrix<f64>)> = match cfg.scheme {
                Scheme::Bd => vec![(u, user.factorization.h_tilde.clone(), user.channel.clone())],
                Scheme::Zf => (0..cfg.n)
                    .map(|a| {
                        let col = user.channel.h.select_cols(&[a]);
                        let dir = SubspacePoint::from_spanning(&col)?;
                        Ok((u * cfg.n + a, dir, ChannelMatrix::new(col, u)))
                    })
                    .collect::<Result<_>>()?,
            };
            for (unit, dir, ch) in targets {
                let tags = [t, unit as u64, b as u64, rep];
                let (point, d) = match q {
                    Quantizer::Perfect => (dir, 0.0),
                    Quantizer::RvqExplicit if cfg.fixed_codebook => {
                        let cb = &self.frozen.codebooks[&(b, unit)];
                        let (_, w) = quantize(&dir, cb)?;
                        let d = chordal_distance_sqr(&dir, w)?;
                        (w.clone(), d)
                    }
                    Quantizer::RvqExplicit => {
                        let mut rng = substream(cfg.seed, &with_purpose(purpose::CODEBOOK, &tags));
                        let qd = quantize_random_codebook(&dir, b, &mut rng)?;
                        (qd.point, qd.distortion)
                    }
                    Quantizer::RvqStatistical => {
                        let mut rng = substream(cfg.seed, &with_purpose(purpose::ERROR, &tags));
                        let d: f64 = sample_min_distortion(dir.m(), dir.n(), b, &mut rng)?;
                        let rotated = dir.rotated(&haar_unitary(dir.n(), &mut rng));
                        (apply_quantization_error(&rotated, d, &mut rng)?, d)
                    }
                    Quantizer::Scalar => {
                        let codec = &self.frozen.codecs[&(b, unit)];
                        let point = quantize_scalar(&ch, codec)?;
                        let d = chordal_distance_sqr(&dir, &point)?;
                        (point, d)
                    }
                };
                total += d;
                points.push(point);
            }
        }
        let count = points.len() as f64;
        Ok(Feedback {
            points,
            distortion: total / count,
        })
    }
}

fn with_purpose(p: u64, tags: &[u64; 4]) -> [u64; 5] {
    [p, tags[0], tags[1], tags[2], tags[3]]
}

/// Units that send feedback: one per user for BD, one per antenna for ZF.
fn units(cfg: &ScenarioConfig) -> usize {
    match cfg.scheme {
        Scheme::Bd => cfg.k,
        Scheme::Zf => cfg.m,
    }
}

/// Dimensions of each quantized subspace.
fn unit_dims(cfg: &ScenarioConfig) -> (usize, usize) {
    match cfg.scheme {
        Scheme::Bd => (cfg.m, cfg.n),
        Scheme::Zf => (cfg.m, 1),
    }
}

/// Bits per quantized unit; ZF splits a user's bits over its antennas.
fn unit_bits(cfg: &ScenarioConfig, bits: u32) -> u32 {
    match cfg.scheme {
        Scheme::Bd => bits,
        Scheme::Zf => bits / cfg.n as u32,
    }
}

/// Collect per-antenna ZF beams into one `m × n` precoder per user.
fn group_beams(p: PrecoderSet<f64>, k: usize, n: usize) -> PrecoderSet<f64> {
    let v = (0..k)
        .map(|i| {
            p.v[i * n..(i + 1) * n]
                .iter()
                .cloned()
                .reduce(|a, b| a.hstack(&b))
                .expect("n >= 1")
        })
        .collect();
    PrecoderSet {
        v,
        scheme: Scheme::Zf,
        power: p.power,
    }
}

fn spectra(channels: &[&ChannelMatrix<f64>], p: &PrecoderSet<f64>) -> Result<Vec<RateSpectrum<f64>>> {
    channels
        .iter()
        .enumerate()
        .map(|(i, ch)| RateSpectrum::new(ch, p, i))
        .collect()
}

fn mean_leakage(users: &[UserChannel<f64>], p: &PrecoderSet<f64>) -> Result<f64> {
    let k = users.len();
    let mut total = 0.0;
    for (i, u) in users.iter().enumerate() {
        for j in (0..k).filter(|&j| j != i) {
            let g: CMatrix<f64> = leakage_statistic(&u.factorization, p, i, j)?;
            total += g.trace().re;
        }
    }
    Ok(total / (k * (k - 1)) as f64)
}
