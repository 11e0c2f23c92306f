//! `mjd,ns` CSV series files.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::TimeSeries;
use crate::error::{Error, Result};
use crate::output::write_atomic;

const HEADER: [&str; 2] = ["mjd", "ns"];

pub fn read_series(path: &Path, interval: i64) -> Result<TimeSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_series_from(file, path, interval)
}

/// Reads from any reader; `path` only labels diagnostics.
pub fn read_series_from<R: Read>(reader: R, path: &Path, interval: i64) -> Result<TimeSeries> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(parse_err(
            1,
            format!(
                "expected header `mjd,ns`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut epochs = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_err(
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let mjd: i64 = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid MJD `{}`", &record[0])))?;
        let ns: f64 = record[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(line, format!("invalid offset `{}`", &record[1])))?;
        if let Some(&prev) = epochs.last() {
            if mjd <= prev {
                return Err(parse_err(line, format!("MJD {mjd} does not follow {prev}")));
            }
            if mjd - prev != interval {
                return Err(parse_err(
                    line,
                    format!(
                        "spacing {} days after MJD {prev} (expected {interval})",
                        mjd - prev
                    ),
                ));
            }
        }
        epochs.push(mjd);
        values.push(ns);
    }
    if epochs.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    TimeSeries::from_epochs(&epochs, values, interval)
}

/// Writes with three fractional digits and LF endings.
pub fn write_series_to<W: Write>(series: &TimeSeries, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", HEADER.join(","))?;
    for (epoch, v) in series.epochs().zip(series.values()) {
        // avoid "-0.000"
        let v = if v.abs() < 5e-4 { 0.0 } else { *v };
        writeln!(w, "{epoch},{v:.3}")?;
    }
    Ok(())
}

pub fn write_series(series: &TimeSeries, path: &Path, force: bool) -> Result<()> {
    write_atomic(path, force, |w| write_series_to(series, w))
}
