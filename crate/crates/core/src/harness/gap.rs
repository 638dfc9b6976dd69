//! Horizontal SNR gap between two sum-rate curves.

use crate::error::{Error, Result};

use super::records::RateRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SnrGap {
    /// Gap at the highest sum rate both curves reach.
    pub at_highest_rate: f64,
    /// Largest gap over the shared rate range.
    pub max: f64,
    /// `(sum_rate, gap)` at every point of the second curve inside the shared range.
    pub per_point: Vec<(f64, f64)>,
}

/// `(snr_db, sum_rate)` sorted by SNR; rates must strictly increase.
fn curve(records: &[RateRecord], label: &str) -> Result<Vec<(f64, f64)>> {
    let mut pts: Vec<(f64, f64)> = records.iter().map(|r| (r.snr_db, r.sum_rate)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 2 {
        return Err(Error::Parameter(format!("curve {label} needs at least two points")));
    }
    for w in pts.windows(2) {
        if !(w[1].0 > w[0].0) || !(w[1].1 > w[0].1) {
            return Err(Error::Parameter(format!(
                "curve {label} is not increasing between {} dB and {} dB",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(pts)
}

/// SNR at which a piecewise-linear curve reaches `rate`.
fn snr_at(pts: &[(f64, f64)], rate: f64) -> f64 {
    let i = pts.partition_point(|p| p.1 < rate).clamp(1, pts.len() - 1);
    let (x0, y0) = pts[i - 1];
    let (x1, y1) = pts[i];
    x0 + (rate - y0) * (x1 - x0) / (y1 - y0)
}

/// Extra SNR curve `a` needs to reach each sum rate achieved on curve `b`.
///
/// Positive when `a` is the worse curve. Rates outside the range both
/// curves cover are ignored; disjoint ranges are an error.
pub fn measure_snr_gap(a: &[RateRecord], b: &[RateRecord]) -> Result<SnrGap> {
    let ca = curve(a, "a")?;
    let cb = curve(b, "b")?;
    let lo = ca[0].1.max(cb[0].1);
    let hi = ca[ca.len() - 1].1.min(cb[cb.len() - 1].1);
    if !(hi >= lo) {
        return Err(Error::Parameter(format!(
            "sum-rate ranges do not overlap (a: {:.4}..{:.4}, b: {:.4}..{:.4})",
            ca[0].1,
            ca[ca.len() - 1].1,
            cb[0].1,
            cb[cb.len() - 1].1
        )));
    }
    let gap = |rate: f64| snr_at(&ca, rate) - snr_at(&cb, rate);
    let per_point: Vec<(f64, f64)> = cb
        .iter()
        .filter(|p| p.1 >= lo && p.1 <= hi)
        .map(|p| (p.1, gap(p.1)))
        .collect();
    let at_highest_rate = gap(hi);
    let max = per_point.iter().map(|p| p.1).fold(at_highest_rate, f64::max);
    Ok(SnrGap {
        at_highest_rate,
        max,
        per_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Quantizer;
    use crate::precoding::Scheme;

    fn curve_of(points: &[(f64, f64)]) -> Vec<RateRecord> {
        points
            .iter()
            .map(|&(snr_db, sum_rate)| RateRecord {
                scenario_id: "t".into(),
                scheme: Scheme::Bd,
                quantizer: Quantizer::Perfect,
                m: 4,
                n: 2,
                k: 2,
                snr_db,
                bits_per_user: 0,
                trials: 1,
                sum_rate,
                per_user_rate: sum_rate / 2.0,
                rate_loss: 0.0,
                theorem1_bound: 0.0,
                empirical_distortion: 0.0,
                distortion_bound: 0.0,
                std_err: 0.0,
            })
            .collect()
    }

    fn rate(snr: f64) -> f64 {
        4.0 * (1.0 + 10f64.powf(snr / 10.0)).log2()
    }

    #[test]
    fn identical_curves() {
        let c = curve_of(&(0..=10).map(|i| (2.0 * i as f64, rate(2.0 * i as f64))).collect::<Vec<_>>());
        let g = measure_snr_gap(&c, &c).unwrap();
        assert!(g.at_highest_rate.abs() < 1e-12 && g.max.abs() < 1e-12);
    }

    #[test]
    fn shifted_curve() {
        let grid: Vec<f64> = (0..=60).map(|i| 0.5 * i as f64).collect();
        let b = curve_of(&grid.iter().map(|&s| (s, rate(s))).collect::<Vec<_>>());
        let a = curve_of(&grid.iter().map(|&s| (s, rate(s - 3.0))).collect::<Vec<_>>());
        let g = measure_snr_gap(&a, &b).unwrap();
        assert!((g.at_highest_rate - 3.0).abs() < 0.01);
        for &(_, x) in &g.per_point {
            assert!((x - 3.0).abs() < 0.01, "{x}");
        }
    }

    #[test]
    fn disjoint_ranges() {
        let a = curve_of(&[(0.0, 1.0), (10.0, 2.0)]);
        let b = curve_of(&[(0.0, 3.0), (10.0, 4.0)]);
        assert!(measure_snr_gap(&a, &b).is_err());
    }

    #[test]
    fn non_monotone() {
        let a = curve_of(&[(0.0, 1.0), (5.0, 3.0), (10.0, 2.0)]);
        let b = curve_of(&[(0.0, 1.0), (10.0, 4.0)]);
        assert!(measure_snr_gap(&a, &b).is_err());
    }
}
