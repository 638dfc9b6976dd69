//! Command-line front end for the BD/ZF limited-feedback simulator.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use bdsim::harness::{
    distortion_sweep, measure_snr_gap, parse_grid, read_results, run_scenario, write_results,
    ScenarioConfig, DEFAULT_EXPLICIT_CAP, DEFAULT_TRIALS,
};
use bdsim::precoding::Scheme;
use bdsim::scaling::{
    bits_3db_bd, bits_3db_zf, bits_for_rate_loss, bits_for_rate_loss_exact, compare_bd_zf_bits, ExactTarget,
    ScalingQuery,
};
use bdsim::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "bdsim", version, about = "Block diagonalization with finite-rate feedback: simulation and scaling laws")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for every random stream (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo trials (overrides the config file).
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Fail instead of switching quantizer modes or working around degenerate draws.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file and write per-SNR results as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Feedback bits per user that bound the per-user rate loss by log2(b).
    Scaling {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// SNR grid in dB: `start:step:stop` or a comma-separated list.
        #[arg(long, allow_hyphen_values = true)]
        pdb_range: String,
        #[arg(long)]
        target_b: f64,
        /// ZF reports bits per receive antenna.
        #[arg(long, default_value = "BD")]
        scheme: Scheme,
    },
    /// Bits BD and ZF need for the same target sum rate.
    CompareZfBd {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Per-user rate loss allowed to ZF, in bits.
        #[arg(long)]
        rate_target: f64,
        #[arg(long, default_value_t = 15.0, allow_hyphen_values = true)]
        pdb: f64,
    },
    /// Measured random-codebook distortion against its bound.
    Distortion {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Codebook sizes in bits: `start:step:stop` or a comma-separated list.
        #[arg(long)]
        bits_range: String,
        /// Larger codebooks sample the best-codeword law instead of searching.
        #[arg(long, default_value_t = DEFAULT_EXPLICIT_CAP)]
        explicit_cap: u32,
    },
    /// Horizontal SNR gap between two result files (extra SNR curve `a` needs).
    Gap {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::DegenerateChannel(_) | Error::DegenerateInput(_) | Error::NotOrthonormal(_)) => EXIT_DEGENERATE,
        Some(_) => EXIT_CONFIG,
        None => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = cli.global;
    rayon::ThreadPoolBuilder::new()
        .num_threads(g.threads)
        .build_global()
        .context("starting worker threads")?;
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Simulate { config, out: path } => {
            let mut cfg = ScenarioConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            if let Some(seed) = g.seed {
                cfg.seed = seed;
            }
            if let Some(trials) = g.trials {
                cfg.trials = trials;
            }
            cfg.strict |= g.strict;
            let res = run_scenario(&cfg)?;
            if res.degenerate_events > 0 {
                warn!("{} degenerate draws were redrawn or worked around", res.degenerate_events);
            }
            write_results(&res.records, &path)?;
            info!("wrote {} records to {}", res.records.len(), path.display());
        }
        Command::Scaling {
            m,
            n,
            pdb_range,
            target_b,
            scheme,
        } => {
            writeln!(out, "p_db,bits_closed_form,bits_exact,bits_exact_with_tail,bits_3db")?;
            for p_db in parse_grid(&pdb_range)? {
                let q = ScalingQuery {
                    m,
                    n,
                    p_db,
                    b_target: target_b,
                    scheme,
                };
                let three_db = match scheme {
                    Scheme::Bd => bits_3db_bd(m, n, p_db)?,
                    Scheme::Zf => bits_3db_zf(m, p_db)?,
                };
                writeln!(
                    out,
                    "{p_db},{:.4},{:.4},{:.4},{:.4}",
                    bits_for_rate_loss(&q)?,
                    bits_for_rate_loss_exact(&q, ExactTarget::Leading)?,
                    bits_for_rate_loss_exact(&q, ExactTarget::Full { a: 0.5 })?,
                    three_db
                )?;
            }
        }
        Command::CompareZfBd { m, n, rate_target, pdb } => {
            let c = compare_bd_zf_bits(m, n, pdb, rate_target)?;
            writeln!(out, "zf_bits = {:.4}", c.zf_bits)?;
            writeln!(out, "bd_bits = {:.4}", c.bd_bits)?;
            writeln!(out, "rate_gap_per_user = {:.4}", c.rate_gap_per_user)?;
            writeln!(out, "savings_percent = {:.2}", c.savings_percent)?;
        }
        Command::Distortion {
            m,
            n,
            bits_range,
            explicit_cap,
        } => {
            let bits = parse_grid(&bits_range)?
                .into_iter()
                .map(|b| {
                    if b < 0.0 || b.fract() != 0.0 {
                        bail!(Error::Config(format!("bits must be nonnegative integers, got {b}")));
                    }
                    Ok(b as u32)
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let trials = g.trials.unwrap_or(DEFAULT_TRIALS);
            let seed = g.seed.unwrap_or(1);
            let points = distortion_sweep(m, n, &bits, trials, seed, explicit_cap, g.strict)?;
            writeln!(out, "bits,mode,trials,mean,std_err,bound_leading,bound_full")?;
            for p in points {
                writeln!(
                    out,
                    "{},{},{},{:.6},{:.6},{:.6},{:.6}",
                    p.bits, p.mode, p.trials, p.mean, p.std_err, p.bound_leading, p.bound_full
                )?;
            }
        }
        Command::Gap { a, b } => {
            let ra = read_results(&a).with_context(|| format!("reading {}", a.display()))?;
            let rb = read_results(&b).with_context(|| format!("reading {}", b.display()))?;
            let gap = measure_snr_gap(&ra, &rb)?;
            writeln!(out, "at_highest_rate_db = {:.4}", gap.at_highest_rate)?;
            writeln!(out, "max_db = {:.4}", gap.max)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_kind() {
        let degenerate = anyhow::Error::new(Error::DegenerateChannel(1e-14)).context("trial 3");
        assert_eq!(exit_code(&degenerate), EXIT_DEGENERATE);
        assert_eq!(exit_code(&Error::NotOrthonormal(0.1).into()), EXIT_DEGENERATE);
        assert_eq!(exit_code(&Error::Config("x".into()).into()), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Parse { line: 2, message: "x".into() }.into()), EXIT_CONFIG);
        assert_eq!(exit_code(&anyhow::anyhow!("broken pipe")), 1);
    }
}
