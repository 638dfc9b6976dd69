//! Scenario configuration and its flat `key = value` file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::DEFAULT_BOUND_EXPONENT;
use crate::precoding::Scheme;
use crate::scalar_quant::ReferenceMode;
use crate::scaling::{bits_3db_bd, bits_3db_zf};

/// Largest codebook size (in bits) that is ever searched exhaustively by default.
pub const DEFAULT_EXPLICIT_CAP: u32 = 22;
pub const DEFAULT_TRIALS: usize = 10_000;
const BITS_ROUNDING_SLACK: f64 = 1e-9;

/// How each receiver turns its channel into feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantizer {
    /// The transmitter sees the true channel directions.
    Perfect,
    /// Exhaustive search over a random codebook.
    RvqExplicit,
    /// Synthetic quantization drawn from the best-of-`2^B` distortion law.
    RvqStatistical,
    /// Per-entry phase/magnitude quantizer.
    Scalar,
}

impl fmt::Display for Quantizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantizer::Perfect => "perfect",
            Quantizer::RvqExplicit => "rvq_explicit",
            Quantizer::RvqStatistical => "rvq_statistical",
            Quantizer::Scalar => "scalar",
        })
    }
}

impl FromStr for Quantizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "perfect" => Ok(Quantizer::Perfect),
            "rvq_explicit" | "rvq" => Ok(Quantizer::RvqExplicit),
            "rvq_statistical" => Ok(Quantizer::RvqStatistical),
            "scalar" => Ok(Quantizer::Scalar),
            other => Err(Error::Config(format!(
                "unknown quantizer `{other}` (expected perfect, rvq_explicit, rvq_statistical or scalar)"
            ))),
        }
    }
}

/// Feedback bits per user as a function of the SNR point.
#[derive(Debug, Clone, PartialEq)]
pub enum BitRule {
    Fixed(u32),
    /// BD 3 dB law: `n(m−n)/3·P_dB − log2 C_MN`.
    ScaledBd,
    /// ZF 3 dB law `(m−1)/3·P_dB` per receive antenna.
    ScaledZf,
    /// One entry per SNR grid point.
    List(Vec<u32>),
}

impl fmt::Display for BitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitRule::Fixed(b) => write!(f, "fixed:{b}"),
            BitRule::ScaledBd => f.write_str("scaled_bd_3db"),
            BitRule::ScaledZf => f.write_str("scaled_zf_3db"),
            BitRule::List(v) => {
                let parts: Vec<String> = v.iter().map(u32::to_string).collect();
                f.write_str(&parts.join(", "))
            }
        }
    }
}

impl FromStr for BitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("fixed:") {
            return parse_u32(rest, "bit_rule").map(BitRule::Fixed);
        }
        match s {
            "scaled_bd_3db" | "scaled_bd" => Ok(BitRule::ScaledBd),
            "scaled_zf_3db" | "scaled_zf" => Ok(BitRule::ScaledZf),
            _ => {
                let list = split_list(s)
                    .map(|x| parse_u32(x, "bit_rule"))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|_| Error::Config(format!("unrecognised bit_rule `{s}`")))?;
                Ok(BitRule::List(list))
            }
        }
    }
}

impl BitRule {
    /// Real-valued bits the rule asks for at grid point `index`.
    pub fn raw_bits(&self, m: usize, n: usize, snr_db: f64, index: usize) -> Result<f64> {
        Ok(match self {
            BitRule::Fixed(b) => *b as f64,
            BitRule::ScaledBd => bits_3db_bd(m, n, snr_db)?,
            BitRule::ScaledZf => n as f64 * bits_3db_zf(m, snr_db)?,
            BitRule::List(v) => *v
                .get(index)
                .ok_or_else(|| Error::Config(format!("bit list has no entry for grid point {index}")))?
                as f64,
        })
    }

    /// Integer bits used for codebooks: rounded up, never negative.
    pub fn bits(&self, m: usize, n: usize, snr_db: f64, index: usize) -> Result<u32> {
        let raw = self.raw_bits(m, n, snr_db, index)?;
        // integral values that picked up rounding error stay put
        Ok((raw - BITS_ROUNDING_SLACK).ceil().max(0.0) as u32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub snr_grid_db: Vec<f64>,
    pub quantizer: Quantizer,
    pub bit_rule: BitRule,
    pub trials: usize,
    /// Independent codebooks averaged per trial and user.
    pub codebooks_per_trial: usize,
    /// Reuse one codebook per user for every trial instead of drawing fresh ones.
    pub fixed_codebook: bool,
    pub seed: u64,
    pub scheme: Scheme,
    /// Explicit codebooks above this many bits switch to the statistical mode.
    pub explicit_cap: u32,
    /// Fail instead of switching modes or resampling degenerate draws.
    pub strict: bool,
    /// Tail exponent `a` of the reported distortion bound.
    pub bound_exponent: f64,
    pub reference: ReferenceMode,
    /// Charge the scalar quantizer's reference-row index against its bits.
    pub count_reference_bits: bool,
}

impl ScenarioConfig {
    /// Defaults for everything but the antenna layout.
    pub fn new(m: usize, n: usize) -> Self {
        Self {
            id: "scenario".into(),
            m,
            n,
            k: if n == 0 { 0 } else { m / n },
            snr_grid_db: (0..=15).map(|i| 2.0 * i as f64).collect(),
            quantizer: Quantizer::Perfect,
            bit_rule: BitRule::Fixed(0),
            trials: DEFAULT_TRIALS,
            codebooks_per_trial: 1,
            fixed_codebook: false,
            seed: 1,
            scheme: Scheme::Bd,
            explicit_cap: DEFAULT_EXPLICIT_CAP,
            strict: false,
            bound_exponent: DEFAULT_BOUND_EXPONENT,
            reference: ReferenceMode::default(),
            count_reference_bits: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.k * self.n != self.m {
            return Err(Error::Config(format!(
                "k·n must equal m (got m={}, n={}, k={})",
                self.m, self.n, self.k
            )));
        }
        if self.k < 2 {
            return Err(Error::Config("need at least two users".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.codebooks_per_trial == 0 {
            return Err(Error::Config("codebooks_per_trial must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("snr_grid_db must be a nonempty list of finite values".into()));
        }
        if let BitRule::List(v) = &self.bit_rule {
            if v.len() != self.snr_grid_db.len() {
                return Err(Error::Config(format!(
                    "bit list has {} entries but the SNR grid has {}",
                    v.len(),
                    self.snr_grid_db.len()
                )));
            }
        }
        if !(self.bound_exponent > 0.0 && self.bound_exponent < 1.0) {
            return Err(Error::Config(format!("bound_exponent must lie in (0, 1), got {}", self.bound_exponent)));
        }
        if self.quantizer == Quantizer::RvqStatistical && self.m < 2 * self.n {
            return Err(Error::Config(format!(
                "rvq_statistical needs m >= 2n (got m={}, n={})",
                self.m, self.n
            )));
        }
        Ok(())
    }

    /// Parse the flat `key = value` format. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new(0, 0);
        let mut k_given = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let line_err = |message: String| Error::Parse {
                line: lineno as u64 + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| line_err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let wrap = |e: Error| line_err(e.to_string());
            match key {
                "id" | "scenario_id" => cfg.id = value.to_string(),
                "m" => cfg.m = parse_usize(value, key).map_err(wrap)?,
                "n" => cfg.n = parse_usize(value, key).map_err(wrap)?,
                "k" => {
                    cfg.k = parse_usize(value, key).map_err(wrap)?;
                    k_given = true;
                }
                "snr_grid_db" => cfg.snr_grid_db = parse_grid(value).map_err(wrap)?,
                "quantizer" => cfg.quantizer = value.parse().map_err(wrap)?,
                "bit_rule" => cfg.bit_rule = value.parse().map_err(wrap)?,
                "trials" => cfg.trials = parse_usize(value, key).map_err(wrap)?,
                "codebooks_per_trial" => cfg.codebooks_per_trial = parse_usize(value, key).map_err(wrap)?,
                "fixed_codebook" => cfg.fixed_codebook = parse_bool(value, key).map_err(wrap)?,
                "seed" => cfg.seed = value.parse().map_err(|_| line_err(format!("invalid seed `{value}`")))?,
                "scheme" => cfg.scheme = value.parse().map_err(wrap)?,
                "explicit_cap" => cfg.explicit_cap = parse_u32(value, key).map_err(wrap)?,
                "strict" => cfg.strict = parse_bool(value, key).map_err(wrap)?,
                "bound_exponent" => {
                    cfg.bound_exponent = value
                        .parse()
                        .map_err(|_| line_err(format!("invalid bound_exponent `{value}`")))?
                }
                "reference" => {
                    cfg.reference = match value {
                        "largest" => ReferenceMode::Largest,
                        "leading" | "first" => ReferenceMode::Leading,
                        other => return Err(line_err(format!("unknown reference mode `{other}`"))),
                    }
                }
                "count_reference_bits" => cfg.count_reference_bits = parse_bool(value, key).map_err(wrap)?,
                other => return Err(line_err(format!("unknown key `{other}`"))),
            }
        }
        if !k_given && cfg.n > 0 {
            cfg.k = cfg.m / cfg.n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Serialise back to the flat format.
    pub fn to_text(&self) -> String {
        let grid: Vec<String> = self.snr_grid_db.iter().map(f64::to_string).collect();
        let reference = match self.reference {
            ReferenceMode::Largest => "largest",
            ReferenceMode::Leading => "leading",
        };
        format!(
            "id = {}\nm = {}\nn = {}\nk = {}\nsnr_grid_db = {}\nquantizer = {}\nbit_rule = {}\ntrials = {}\n\
             codebooks_per_trial = {}\nfixed_codebook = {}\nseed = {}\nscheme = {}\nexplicit_cap = {}\n\
             strict = {}\nbound_exponent = {}\nreference = {}\ncount_reference_bits = {}\n",
            self.id,
            self.m,
            self.n,
            self.k,
            grid.join(", "),
            self.quantizer,
            self.bit_rule,
            self.trials,
            self.codebooks_per_trial,
            self.fixed_codebook,
            self.seed,
            self.scheme,
            self.explicit_cap,
            self.strict,
            self.bound_exponent,
            reference,
            self.count_reference_bits,
        )
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn parse_usize(s: &str, key: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid {key} `{s}`")))
}

fn parse_u32(s: &str, key: &str) -> Result<u32> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid {key} `{s}`")))
}

fn parse_bool(s: &str, key: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid {key} `{s}` (expected true/false)"))),
    }
}

/// `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("invalid grid `{s}`"));
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let (start, step, stop) = match parts.as_slice() {
            [a, b] => (*a, 1.0, *b),
            [a, st, b] => (*a, *st, *b),
            _ => return Err(bad()),
        };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    split_list(s).map(|x| x.parse::<f64>().map_err(|_| bad())).collect()
}
