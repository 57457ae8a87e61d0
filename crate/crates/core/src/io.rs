//! CSV formats: observed samples (`x,y`) and curve results
//! (`k,estimator,replicates,failures,mean,bias,variance,rmse`).

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::experiments::{CellStats, CurveCell, CurveResult};
use crate::sample::ObservedSample;

pub const CURVE_HEADER: [&str; 8] = ["k", "estimator", "replicates", "failures", "mean", "bias", "variance", "rmse"];

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Input { line, message: format!("{other:?}") },
    }
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, index: usize, line: u64, name: &str) -> Result<T> {
    let raw = record.get(index).unwrap_or("").trim();
    raw.parse().map_err(|_| Error::Input {
        line,
        message: format!("invalid {name} value `{raw}`"),
    })
}

/// Reads an observed sample from CSV with header `x,y`.
pub fn read_sample<R: Read>(reader: R) -> Result<ObservedSample> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().collect::<Vec<_>>() != ["x", "y"] {
        return Err(Error::Input { line: 1, message: "expected header `x,y`".into() });
    }
    let mut pairs = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::Input { line, message: format!("expected 2 fields, found {}", record.len()) });
        }
        let x: f64 = parse_field(&record, 0, line, "x")?;
        let y: f64 = parse_field(&record, 1, line, "y")?;
        if !(x > 0.0 && x.is_finite() && y > 0.0) {
            return Err(Error::Input { line, message: format!("values must be positive, got ({x}, {y})") });
        }
        if x > y {
            return Err(Error::Input { line, message: format!("x = {x} exceeds y = {y}") });
        }
        pairs.push((x, y));
    }
    ObservedSample::new(pairs)
}

/// Writes curve cells in their stored order. Missing statistics are empty fields.
pub fn write_curves<W: Write>(curve: &CurveResult, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CURVE_HEADER).map_err(csv_error)?;
    for cell in &curve.cells {
        let stats = cell.stats.map(|s| {
            [s.mean, s.bias, s.variance, s.rmse].map(|v| v.to_string())
        });
        let stats = stats.unwrap_or_default();
        wtr.write_record([
            cell.k.to_string().as_str(),
            cell.kind.name(),
            cell.replicates.to_string().as_str(),
            cell.failures.to_string().as_str(),
            stats[0].as_str(),
            stats[1].as_str(),
            stats[2].as_str(),
            stats[3].as_str(),
        ])
        .map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_curves<R: Read>(reader: R) -> Result<CurveResult> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().collect::<Vec<_>>() != CURVE_HEADER {
        return Err(Error::Input { line: 1, message: format!("expected header `{}`", CURVE_HEADER.join(",")) });
    }
    let mut cells = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let kind_name = record.get(1).unwrap_or("");
        let kind = EstimatorKind::from_name(kind_name).ok_or_else(|| Error::Input {
            line,
            message: format!("unknown estimator `{kind_name}`"),
        })?;
        let stats = if record.get(4).unwrap_or("").is_empty() {
            None
        } else {
            Some(CellStats {
                mean: parse_field(&record, 4, line, "mean")?,
                bias: parse_field(&record, 5, line, "bias")?,
                variance: parse_field(&record, 6, line, "variance")?,
                rmse: parse_field(&record, 7, line, "rmse")?,
            })
        };
        cells.push(CurveCell {
            k: parse_field(&record, 0, line, "k")?,
            kind,
            replicates: parse_field(&record, 2, line, "replicates")?,
            failures: parse_field(&record, 3, line, "failures")?,
            stats,
        });
    }
    Ok(CurveResult { cells })
}
