//! Plain-text exchange formats: covariance matrices and sampled records as
//! CSV, and `key = value` metadata sidecars.

use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;

use crate::detection::SampledRecord;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `x1..xn,p1..pn`.
pub fn covariance_header(n_modes: usize) -> Vec<String> {
    (1..=n_modes)
        .map(|i| format!("x{i}"))
        .chain((1..=n_modes).map(|i| format!("p{i}")))
        .collect()
}

pub fn write_covariance_csv<T: Real, W: Write>(cov: &DMatrix<T>, out: W) -> Result<()> {
    if cov.nrows() % 2 != 0 || cov.nrows() != cov.ncols() {
        return Err(Error::Domain("covariance must be 2n×2n".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(covariance_header(cov.nrows() / 2))?;
    for r in cov.row_iter() {
        w.write_record(r.iter().map(|v| v.as_f64().to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_covariance_csv<T: Real, R: Read>(input: R) -> Result<DMatrix<T>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let dim = header.len();
    if dim == 0 || dim % 2 != 0 || header != covariance_header(dim / 2) {
        return Err(Error::Parse(format!("unexpected covariance header {header:?}")));
    }
    let mut values = Vec::with_capacity(dim * dim);
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec?;
        rows += 1;
        for (j, field) in rec.iter().enumerate() {
            values.push(parse_number(field, rows + 1, j + 1)?);
        }
    }
    if rows != dim {
        return Err(Error::Parse(format!("expected {dim} rows, found {rows}")));
    }
    Ok(DMatrix::from_row_iterator(dim, dim, values.into_iter().map(T::lit)))
}

fn parse_number(field: &str, line: usize, column: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}, column {column}: {field:?} is not a number")))
}

/// `time_s,pixel_1..pixel_n`, one row per sample.
pub fn write_record_csv<T: Real, R: SampledRecord<T> + ?Sized, W: Write>(
    record: &R,
    out: W,
) -> Result<()> {
    let ch = record.channels();
    let mut w = csv::Writer::from_writer(out);
    let header = std::iter::once("time_s".to_string())
        .chain((1..=ch.len()).map(|i| format!("pixel_{i}")));
    w.write_record(header)?;
    for (k, t) in record.times().into_iter().enumerate() {
        let row = std::iter::once(t.to_string()).chain(ch.iter().map(|c| c[k].as_f64().to_string()));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Sample times and per-pixel columns of a record CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordTable {
    pub times: Vec<f64>,
    pub channels: Vec<Vec<f64>>,
}

pub fn read_record_csv<R: Read>(input: R) -> Result<RecordTable> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let n = header.len().saturating_sub(1);
    let ok = header.first().map(String::as_str) == Some("time_s")
        && header[1..]
            .iter()
            .enumerate()
            .all(|(i, h)| *h == format!("pixel_{}", i + 1));
    if !ok {
        return Err(Error::Parse(format!("unexpected record header {header:?}")));
    }
    let mut table = RecordTable {
        times: Vec::new(),
        channels: vec![Vec::new(); n],
    };
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        table.times.push(parse_number(&rec[0], line, 1)?);
        for i in 0..n {
            table.channels[i].push(parse_number(&rec[i + 1], line, i + 2)?);
        }
    }
    Ok(table)
}

/// One `key = value` pair per line.
pub fn write_metadata<W: Write>(pairs: &[(String, String)], mut out: W) -> Result<()> {
    for (k, v) in pairs {
        if k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(Error::Domain(format!("metadata entry {k:?} cannot be encoded")));
        }
        writeln!(out, "{k} = {v}")?;
    }
    Ok(())
}

/// Parses a sidecar written by [`write_metadata`]; blank lines and `#`
/// comments are skipped.
pub fn read_metadata<R: BufRead>(input: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
