//! CSV and plot-data output of convergence reports.

use std::io::{Read, Write};

use crate::convergence::ConvergenceReport;
use crate::error::{BenchError, Result};
use crate::order::OrderEstimate;

pub const CSV_HEADER: [&str; 9] = ["case", "n", "q", "p", "seed", "h", "max_err", "slope", "floor"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Plotdata,
}

impl std::str::FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "plotdata" => Ok(Format::Plotdata),
            other => Err(BenchError::Domain(format!("unknown format {other:?}"))),
        }
    }
}

/// 17 significant digits: enough to read back the same `f64`.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn write_csv<W: Write>(reports: &[ConvergenceReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        for (h, e) in r.hs.iter().zip(&r.max_err) {
            w.write_record([
                r.case.clone(),
                r.n.to_string(),
                r.q.to_string(),
                r.p.to_string(),
                r.seed.to_string(),
                float(*h),
                float(*e),
                opt_float(r.slope()),
                opt_float(r.floor()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads back what [`write_csv`] produced. Consecutive rows sharing
/// `case, n, q, p, seed` form one report; the fit count is not stored and
/// comes back as zero.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ConvergenceReport>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(CSV_HEADER) {
        return Err(BenchError::Domain("unexpected CSV header".into()));
    }
    let bad = |what: &str, v: &str| BenchError::Domain(format!("bad {what} {v:?}"));
    let mut out: Vec<ConvergenceReport> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let int = |k: usize| field(k).parse::<usize>().map_err(|_| bad(CSV_HEADER[k], field(k)));
        let real = |k: usize| field(k).parse::<f64>().map_err(|_| bad(CSV_HEADER[k], field(k)));
        let case = field(0).to_string();
        let (n, q, p) = (int(1)?, int(2)?, int(3)?);
        let seed = field(4).parse::<u64>().map_err(|_| bad("seed", field(4)))?;
        let (h, e) = (real(5)?, real(6)?);
        let slope = if field(7).is_empty() { None } else { Some(real(7)?) };
        let floor = if field(8).is_empty() { None } else { Some(real(8)?) };

        let same = out
            .last()
            .is_some_and(|r| r.case == case && (r.n, r.q, r.p, r.seed) == (n, q, p, seed));
        if !same {
            out.push(ConvergenceReport {
                case,
                n,
                q,
                p,
                seed,
                hs: Vec::new(),
                max_err: Vec::new(),
                order: slope.map(|slope| OrderEstimate {
                    slope,
                    floor,
                    fitted: 0,
                }),
            });
        }
        let r = out.last_mut().expect("just pushed");
        r.hs.push(h);
        r.max_err.push(e);
    }
    Ok(out)
}

/// Two-column `h err` blocks, one per report, separated by blank lines.
pub fn write_plotdata<W: Write>(reports: &[ConvergenceReport], mut out: W) -> Result<()> {
    for (k, r) in reports.iter().enumerate() {
        if k > 0 {
            writeln!(out)?;
        }
        writeln!(out, "# {} n={} q={} p={} seed={}", r.case, r.n, r.q, r.p, r.seed)?;
        for (h, e) in r.hs.iter().zip(&r.max_err) {
            writeln!(out, "{} {}", float(*h), float(*e))?;
        }
    }
    Ok(())
}

pub fn emit_report<W: Write>(reports: &[ConvergenceReport], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(reports, out),
        Format::Plotdata => write_plotdata(reports, out),
    }
}
