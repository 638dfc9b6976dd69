//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance -- 3 7` runs only the listed criteria.

use std::process::ExitCode;
use std::time::Instant;

use bdsim::channel::draw_user_channel;
use bdsim::geometry::{
    chordal_distance_sqr_from_angles, distortion_bound, quantize_random_codebook, sample_uniform_subspace,
    DistortionBoundParams,
};
use bdsim::harness::{measure_snr_gap, run_scenario, BitRule, Quantizer, ScenarioConfig, ScenarioResult};
use bdsim::precoding::{bd_precoders, Scheme};
use bdsim::rng::substream;
use bdsim::scaling::{bd_zf_rate_gap, compare_bd_zf_bits};
use bdsim::SubspacePoint64;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn stream(tag: u64) -> bdsim::rng::SimRng {
    substream(SEED, &[0xacce, tag])
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn chordal_identity() -> Outcome {
    let mut rng = stream(1);
    let mut worst = 0f64;
    for &(m, n) in &[(4, 2), (6, 3)] {
        for _ in 0..1000 {
            let a: SubspacePoint64 = sample_uniform_subspace(m, n, &mut rng).unwrap();
            let b: SubspacePoint64 = sample_uniform_subspace(m, n, &mut rng).unwrap();
            let angles = chordal_distance_sqr_from_angles(&a, &b).unwrap();
            let frob = n as f64 - a.basis().adjoint_mul(b.basis()).norm_sqr();
            worst = worst.max((angles - frob).abs());
        }
    }
    outcome(worst <= 1e-9, format!("max |difference| {worst:.2e} (limit 1e-9)"))
}

fn bd_zero_interference() -> Outcome {
    let mut worst = 0f64;
    for &(m, n, k) in &[(4, 2, 2), (6, 2, 3), (6, 3, 2)] {
        for t in 0..100 {
            let users: Vec<_> = (0..k)
                .map(|u| draw_user_channel::<f64>(m, n, SEED, t, u).unwrap())
                .collect();
            let dirs: Vec<_> = users.iter().map(|u| u.factorization.h_tilde.clone()).collect();
            let p = bd_precoders(&dirs, 1.0).unwrap();
            for (j, u) in users.iter().enumerate() {
                for (i, v) in p.v.iter().enumerate() {
                    if i != j {
                        worst = worst.max(u.channel.h.adjoint_mul(v).frobenius_norm());
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max ‖H_j^H V_i‖_F {worst:.2e} (limit 1e-10)"))
}

fn empirical_distortion(m: usize, n: usize, bits: u32, trials: usize, tag: u64) -> Vec<f64> {
    let mut rng = stream(tag);
    (0..trials)
        .map(|_| {
            let h: SubspacePoint64 = sample_uniform_subspace(m, n, &mut rng).unwrap();
            quantize_random_codebook(&h, bits, &mut rng).unwrap().distortion
        })
        .collect()
}

fn distortion_below_bound() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &b in &[4u32, 8, 12] {
        let (mean, se) = mean_se(&empirical_distortion(4, 2, b, 10_000, 30 + b as u64));
        let bound = distortion_bound(&DistortionBoundParams::with_exponent(4, 2, b as f64, 0.5).unwrap())
            .unwrap()
            .full();
        pass &= mean - 3.0 * se <= bound;
        parts.push(format!("B={b}: {mean:.4}±{se:.4} vs {bound:.4}"));
    }
    outcome(pass, parts.join("; "))
}

/// `∫_0^1 (1 − x^(m−1))^N dx` by composite Simpson.
fn miso_mean_quadrature(m: usize, bits: u32) -> f64 {
    let size = 2f64.powi(bits as i32);
    let f = |x: f64| (1.0 - x.powi(m as i32 - 1)).max(0.0).powf(size);
    let intervals = 200_000;
    let h = 1.0 / intervals as f64;
    let mut acc = f(0.0) + f(1.0);
    for i in 1..intervals {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Same integral as a Beta function.
fn miso_mean_beta(m: usize, bits: u32) -> f64 {
    let a = 1.0 / (m as f64 - 1.0);
    let size = 2f64.powi(bits as i32);
    (libm::lgamma(a + 1.0) + libm::lgamma(size + 1.0) - libm::lgamma(a + size + 1.0)).exp()
}

fn miso_distortion_oracle() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &m in &[2usize, 4] {
        for &b in &[1u32, 4, 8] {
            let (mean, se) = mean_se(&empirical_distortion(m, 1, b, 100_000, 40 + 10 * m as u64 + b as u64));
            let quad = miso_mean_quadrature(m, b);
            let beta = miso_mean_beta(m, b);
            let ok = (mean - quad).abs() <= 3.0 * se && (quad - beta).abs() <= 1e-6;
            pass &= ok;
            parts.push(format!("m={m} B={b}: {mean:.5} vs {quad:.5} ({:.1} SE)", (mean - quad) / se));
        }
    }
    outcome(pass, parts.join("; "))
}

fn explicit_run(bits: u32) -> ScenarioResult {
    let cfg = ScenarioConfig {
        id: format!("explicit-{bits}"),
        snr_grid_db: vec![0.0, 5.0, 10.0],
        quantizer: Quantizer::RvqExplicit,
        bit_rule: BitRule::Fixed(bits),
        trials: 10_000,
        codebooks_per_trial: 5,
        seed: SEED,
        ..ScenarioConfig::new(4, 2)
    };
    run_scenario(&cfg).unwrap()
}

fn rate_loss_bound_holds(runs: &[ScenarioResult]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for res in runs {
        for (r, p) in res.records.iter().zip(&res.points) {
            let slack = r.theorem1_bound + 3.0 * p.rate_loss.std_err - p.rate_loss.mean;
            pass &= slack >= 0.0;
            parts.push(format!(
                "B={} {}dB: {:.3} ≤ {:.3}",
                r.bits_per_user, r.snr_db, p.rate_loss.mean, r.theorem1_bound
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn leakage_identity(runs: &[ScenarioResult]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for res in runs {
        let p = &res.points[0];
        let (m, n) = (res.config.m as f64, res.config.n as f64);
        let expected = n * p.distortion.mean / (m - n);
        let rel = (p.leakage_trace.mean - expected).abs() / expected;
        pass &= rel <= 0.05 && p.leakage_samples >= 100_000;
        parts.push(format!(
            "B={}: {:.4} vs {:.4} ({:.1}%, {} samples)",
            p.bits,
            p.leakage_trace.mean,
            expected,
            100.0 * rel,
            p.leakage_samples
        ));
    }
    outcome(pass, parts.join("; "))
}

fn perfect_curve(m: usize, n: usize, grid: Vec<f64>, trials: usize) -> ScenarioResult {
    let cfg = ScenarioConfig {
        id: "perfect".into(),
        snr_grid_db: grid,
        trials,
        seed: SEED,
        ..ScenarioConfig::new(m, n)
    };
    run_scenario(&cfg).unwrap()
}

fn wide_grid() -> Vec<f64> {
    (-10..=20).map(f64::from).collect()
}

fn scaled_bits_gap() -> Outcome {
    let cfg = ScenarioConfig {
        id: "scaled-bd".into(),
        snr_grid_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
        quantizer: Quantizer::RvqExplicit,
        bit_rule: BitRule::ScaledBd,
        explicit_cap: 12,
        trials: 10_000,
        seed: SEED,
        ..ScenarioConfig::new(4, 2)
    };
    let fb = run_scenario(&cfg).unwrap();
    let perfect = perfect_curve(4, 2, wide_grid(), 10_000);
    let gap = match measure_snr_gap(&fb.records, &perfect.records) {
        Ok(g) => g,
        Err(e) => return outcome(false, e.to_string()),
    };
    let lo = gap.per_point.iter().map(|p| p.1).fold(gap.at_highest_rate, f64::min);
    let pass = lo > 0.0 && gap.max <= 3.0;
    let bits: Vec<String> = fb.records.iter().map(|r| r.bits_per_user.to_string()).collect();
    outcome(
        pass,
        format!(
            "gap {lo:.2}..{:.2} dB, {:.2} dB at top rate (bits {})",
            gap.max,
            gap.at_highest_rate,
            bits.join(",")
        ),
    )
}

fn fixed_bits_saturate() -> Outcome {
    let cfg = ScenarioConfig {
        id: "fixed-10".into(),
        snr_grid_db: (0..=15).map(|i| 2.0 * i as f64).collect(),
        quantizer: Quantizer::RvqExplicit,
        bit_rule: BitRule::Fixed(10),
        trials: 10_000,
        seed: SEED,
        ..ScenarioConfig::new(4, 2)
    };
    let res = run_scenario(&cfg).unwrap();
    let at = |db: f64| res.points.iter().find(|p| p.snr_db == db).unwrap();
    let (p20, p30) = (at(20.0), at(30.0));
    let slope = (p30.sum_rate.mean - p20.sum_rate.mean) / 10.0;
    let perfect_slope = (p30.perfect_sum_rate.mean - p20.perfect_sum_rate.mean) / 10.0;
    let ratio = slope / perfect_slope;
    outcome(
        ratio < 0.25,
        format!("slope {slope:.4} vs perfect {perfect_slope:.4} bps/Hz/dB ({:.1}%)", 100.0 * ratio),
    )
}

fn statistical_mode_matches(explicit: &ScenarioResult) -> Outcome {
    let cfg = ScenarioConfig {
        quantizer: Quantizer::RvqStatistical,
        ..explicit.config.clone()
    };
    let stat = run_scenario(&cfg).unwrap();
    let d_rel = (stat.points[0].distortion.mean - explicit.points[0].distortion.mean).abs()
        / explicit.points[0].distortion.mean;
    let at10 = |r: &ScenarioResult| r.points.iter().find(|p| p.snr_db == 10.0).unwrap().sum_rate.mean;
    let r_rel = (at10(&stat) - at10(explicit)).abs() / at10(explicit);
    outcome(
        d_rel <= 0.05 && r_rel <= 0.02,
        format!(
            "distortion {:.4} vs {:.4} ({:.2}%), sum rate at 10 dB {:.3} vs {:.3} ({:.2}%)",
            stat.points[0].distortion.mean,
            explicit.points[0].distortion.mean,
            100.0 * d_rel,
            at10(&stat),
            at10(explicit),
            100.0 * r_rel
        ),
    )
}

fn bd_zf_gap() -> Outcome {
    let run = |scheme| {
        let cfg = ScenarioConfig {
            id: format!("{scheme}"),
            snr_grid_db: vec![30.0],
            trials: 10_000,
            seed: SEED,
            scheme,
            ..ScenarioConfig::new(4, 2)
        };
        run_scenario(&cfg).unwrap().points[0].sum_rate.mean
    };
    let diff = run(Scheme::Bd) - run(Scheme::Zf);
    let expected = bd_zf_rate_gap(4, 2, 2).unwrap();
    let rel = (diff - expected).abs() / expected;
    outcome(
        rel <= 0.10,
        format!("difference {diff:.3} vs {expected:.3} bps/Hz ({:.1}%)", 100.0 * rel),
    )
}

fn bit_savings() -> Outcome {
    let a = compare_bd_zf_bits(6, 2, 15.0, 1.0).unwrap().savings_percent;
    let b = compare_bd_zf_bits(9, 3, 15.0, 1.0).unwrap().savings_percent;
    outcome(
        (a - 20.0).abs() <= 5.0 && (b - 25.0).abs() <= 5.0,
        format!("m=6,n=2: {a:.1}%; m=9,n=3: {b:.1}%"),
    )
}

/// Gap to `reference` at each point of `curve`, keyed by SNR.
fn gaps_at_points(curve: &ScenarioResult, reference: &ScenarioResult) -> Result<Vec<(f64, f64)>, String> {
    // measuring the reference against the curve samples at the curve's own points
    let g = measure_snr_gap(&reference.records, &curve.records).map_err(|e| e.to_string())?;
    Ok(curve
        .records
        .iter()
        .filter_map(|r| {
            g.per_point
                .iter()
                .find(|p| p.0 == r.sum_rate)
                .map(|p| (r.snr_db, -p.1))
        })
        .collect())
}

fn scalar_quantizer_gaps() -> Outcome {
    let base = ScenarioConfig {
        snr_grid_db: (0..=8).map(|i| 2.5 * i as f64).collect(),
        bit_rule: BitRule::ScaledZf,
        trials: 10_000,
        seed: SEED,
        ..ScenarioConfig::new(6, 1)
    };
    let scalar = run_scenario(&ScenarioConfig {
        id: "scalar".into(),
        quantizer: Quantizer::Scalar,
        ..base.clone()
    })
    .unwrap();
    let rvq = run_scenario(&ScenarioConfig {
        id: "rvq".into(),
        quantizer: Quantizer::RvqStatistical,
        ..base
    })
    .unwrap();
    let perfect = perfect_curve(6, 1, wide_grid(), 10_000);
    let gaps = match gaps_at_points(&scalar, &perfect) {
        Ok(g) => g,
        Err(e) => return outcome(false, format!("scalar vs perfect: {e}")),
    };
    let at = |db: f64| gaps.iter().find(|g| g.0 == db).map(|g| g.1);
    let (Some(g5), Some(g20)) = (at(5.0), at(20.0)) else {
        return outcome(false, "5 dB or 20 dB point outside the perfect curve".into());
    };
    let drift = (g20 - g5).abs();
    let lo = gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let hi = gaps.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    let vs_rvq = match measure_snr_gap(&scalar.records, &rvq.records) {
        Ok(g) => g.at_highest_rate,
        Err(e) => return outcome(false, format!("scalar vs rvq: {e}")),
    };
    outcome(
        drift <= 0.75 && (1.5..=4.0).contains(&vs_rvq),
        format!(
            "gap to perfect {g5:.2} dB at 5 dB, {g20:.2} dB at 20 dB (range over 0-20 dB {lo:.2}..{hi:.2}); \
             gap to random codebook {vs_rvq:.2} dB"
        ),
    )
}

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |c: u32| wanted.is_empty() || wanted.contains(&c);
    let mut failures = 0;
    let mut report = |c: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        if !run(c) {
            return;
        }
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {c:>2} {} {name}: {} [{secs:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failures += 1;
        }
    };

    report(1, "chordal distance from angles equals Frobenius form", &mut chordal_identity);
    report(2, "BD precoders null other users", &mut bd_zero_interference);
    report(3, "random codebook distortion below bound", &mut distortion_below_bound);
    report(4, "single-antenna distortion matches quadrature", &mut miso_distortion_oracle);

    let mut explicit: Vec<ScenarioResult> = Vec::new();
    if run(5) || run(6) || run(9) {
        let start = Instant::now();
        explicit = vec![explicit_run(8), explicit_run(12)];
        println!("(shared explicit-codebook runs took {:.1} s)", start.elapsed().as_secs_f64());
    }
    report(5, "rate loss within n·log2(1+P·D)", &mut || rate_loss_bound_holds(&explicit));
    report(6, "interference leakage mean equals n·D/(m−n)", &mut || leakage_identity(&explicit));
    report(7, "scaled bits keep BD within 3 dB", &mut scaled_bits_gap);
    report(8, "fixed bits become interference limited", &mut fixed_bits_saturate);
    report(9, "statistical quantization matches explicit codebooks", &mut || {
        statistical_mode_matches(&explicit[1])
    });
    report(10, "BD over ZF high-SNR gap", &mut bd_zf_gap);
    report(11, "BD bit savings over ZF", &mut bit_savings);
    report(12, "scalar quantizer constant gap", &mut scalar_quantizer_gaps);

    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
