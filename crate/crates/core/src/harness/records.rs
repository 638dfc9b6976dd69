//! Per-point result rows and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::precoding::Scheme;

use super::config::Quantizer;

/// Column order of the results file.
pub const CSV_COLUMNS: [&str; 16] = [
    "scenario_id",
    "scheme",
    "quantizer",
    "m",
    "n",
    "k",
    "snr_db",
    "bits_per_user",
    "trials",
    "sum_rate",
    "per_user_rate",
    "rate_loss",
    "theorem1_bound",
    "empirical_distortion",
    "distortion_bound",
    "std_err",
];

/// Averages at one SNR point of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRecord {
    pub scenario_id: String,
    pub scheme: Scheme,
    /// Quantizer actually used at this point.
    pub quantizer: Quantizer,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub snr_db: f64,
    pub bits_per_user: u32,
    pub trials: usize,
    pub sum_rate: f64,
    pub per_user_rate: f64,
    /// Per-user loss against perfect channel knowledge with the same scheme.
    pub rate_loss: f64,
    /// `n·log2(1 + P·D̂)` with the measured distortion `D̂`.
    pub theorem1_bound: f64,
    pub empirical_distortion: f64,
    /// Random-codebook distortion bound at `bits_per_user`; NaN when it does not apply.
    pub distortion_bound: f64,
    /// Standard error of `sum_rate`.
    pub std_err: f64,
}

impl RateRecord {
    fn to_fields(&self) -> Vec<String> {
        vec![
            self.scenario_id.clone(),
            self.scheme.to_string(),
            self.quantizer.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            fmt_f64(self.snr_db),
            self.bits_per_user.to_string(),
            self.trials.to_string(),
            fmt_f64(self.sum_rate),
            fmt_f64(self.per_user_rate),
            fmt_f64(self.rate_loss),
            fmt_f64(self.theorem1_bound),
            fmt_f64(self.empirical_distortion),
            fmt_f64(self.distortion_bound),
            fmt_f64(self.std_err),
        ]
    }
}

/// Shortest representation that parses back to the same bits.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_records<W: Write>(records: &[RateRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record(r.to_fields()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(records: &[RateRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_records(records, std::io::BufWriter::new(file))
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RateRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let mut index = [usize::MAX; CSV_COLUMNS.len()];
    for (pos, name) in header.iter().enumerate() {
        let name = name.trim();
        let slot = CSV_COLUMNS
            .iter()
            .position(|&c| c == name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("unknown column `{name}`"),
            })?;
        if index[slot] != usize::MAX {
            return Err(Error::Parse {
                line: 1,
                message: format!("duplicate column `{name}`"),
            });
        }
        index[slot] = pos;
    }
    if let Some(missing) = index.iter().position(|&i| i == usize::MAX) {
        return Err(Error::Parse {
            line: 1,
            message: format!("missing column `{}`", CSV_COLUMNS[missing]),
        });
    }

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |slot: usize| row.get(index[slot]).unwrap_or("").trim();
        let bad = |slot: usize| Error::Parse {
            line,
            message: format!("invalid {} `{}`", CSV_COLUMNS[slot], get(slot)),
        };
        let f = |slot: usize| get(slot).parse::<f64>().map_err(|_| bad(slot));
        let u = |slot: usize| get(slot).parse::<usize>().map_err(|_| bad(slot));
        out.push(RateRecord {
            scenario_id: get(0).to_string(),
            scheme: get(1).parse().map_err(|_| bad(1))?,
            quantizer: get(2).parse().map_err(|_| bad(2))?,
            m: u(3)?,
            n: u(4)?,
            k: u(5)?,
            snr_db: f(6)?,
            bits_per_user: get(7).parse().map_err(|_| bad(7))?,
            trials: u(8)?,
            sum_rate: f(9)?,
            per_user_rate: f(10)?,
            rate_loss: f(11)?,
            theorem1_bound: f(12)?,
            empirical_distortion: f(13)?,
            distortion_bound: f(14)?,
            std_err: f(15)?,
        });
    }
    Ok(out)
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<RateRecord>> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_records(std::io::BufReader::new(file))
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::Parse {
            line,
            message: e.to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(snr: f64) -> RateRecord {
        RateRecord {
            scenario_id: "a,b".into(),
            scheme: Scheme::Bd,
            quantizer: Quantizer::RvqExplicit,
            m: 4,
            n: 2,
            k: 2,
            snr_db: snr,
            bits_per_user: 10,
            trials: 100,
            sum_rate: 1.0 / 3.0,
            per_user_rate: 1.0 / 6.0,
            rate_loss: 0.1 + 0.2,
            theorem1_bound: 1e-300,
            empirical_distortion: 0.123456789012345678,
            distortion_bound: f64::NAN,
            std_err: 2.5e-3,
        }
    }

    fn same(a: &RateRecord, b: &RateRecord) -> bool {
        a.to_fields() == b.to_fields()
    }

    #[test]
    fn round_trip_is_exact() {
        let recs = vec![sample(0.0), sample(-2.5)];
        let mut buf = Vec::new();
        write_records(&recs, &mut buf).unwrap();
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in recs.iter().zip(&back) {
            assert!(same(a, b));
            assert_eq!(a.sum_rate.to_bits(), b.sum_rate.to_bits());
            assert_eq!(a.empirical_distortion.to_bits(), b.empirical_distortion.to_bits());
        }
    }

    #[test]
    fn empty_is_header_only() {
        let mut buf = Vec::new();
        write_records(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), format!("{}\n", CSV_COLUMNS.join(",")));
        assert!(read_records(buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn unknown_column_is_named() {
        let text = format!("{},extra\n", CSV_COLUMNS.join(","));
        let err = read_records(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn missing_column_is_named() {
        let text = CSV_COLUMNS[..15].join(",") + "\n";
        let err = read_records(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("std_err"), "{err}");
    }

    #[test]
    fn bad_value_reports_line() {
        let mut buf = Vec::new();
        write_records(&[sample(0.0), sample(1.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("100", "many", 2);
        match read_records(text.as_bytes()).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("trials"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }
}
