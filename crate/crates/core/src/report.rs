//! CSV rows for bound reports, certificates and block compositions.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which parse
//! back to the identical `f64`. Missing values are empty fields. Parameters
//! are packed into one field as `key=value;key=value`.

use std::io::{Read, Write};
use std::str::FromStr;

use crate::certify::{CertTag, Certificate};
use crate::error::{Error, Result};
use crate::recovery::BoundReport;
use crate::trace_infty::{BlockOracle, Count};

pub const BOUND_HEADER: [&str; 9] = [
    "family",
    "n",
    "lower_sq",
    "lower_tag",
    "measured",
    "measured_remainder",
    "upper",
    "params",
    "seed",
];

pub const BLOCK_HEADER: [&str; 6] = ["j", "start", "end", "block_value", "composed", "tau_start"];

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse()
            .map_err(|e| parse_err(line, format!("bad number '{s}': {e}"))),
    }
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_float(s, line).map(Some)
    }
}

pub fn format_params(params: &[(String, String)]) -> Result<String> {
    let mut parts = Vec::with_capacity(params.len());
    for (k, v) in params {
        if k.is_empty() || k.contains(['=', ';']) || v.contains(';') {
            return Err(Error::InvalidArgument(format!(
                "parameter '{k}={v}' cannot be packed"
            )));
        }
        parts.push(format!("{k}={v}"));
    }
    Ok(parts.join(";"))
}

pub fn parse_params(s: &str, line: usize) -> Result<Vec<(String, String)>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| parse_err(line, format!("parameter '{kv}' lacks '='")))
        })
        .collect()
}

fn bound_record(r: &BoundReport) -> Result<[String; 9]> {
    Ok([
        r.family.clone(),
        r.n.to_string(),
        format_opt(r.lower_sq),
        r.lower_tag.clone(),
        format_opt(r.measured),
        format_float(r.measured_remainder),
        format_opt(r.upper),
        format_params(&r.params)?,
        r.seed.to_string(),
    ])
}

pub fn write_bound_reports<W: Write>(out: W, rows: &[BoundReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv write: {e}"));
    w.write_record(BOUND_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(bound_record(r)?).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv write: {e}")))
}

fn check_header(rec: &csv::StringRecord, want: &[&str]) -> Result<()> {
    if rec.iter().ne(want.iter().copied()) {
        return Err(parse_err(1, format!("expected header {}", want.join(","))));
    }
    Ok(())
}

pub fn read_bound_reports<R: Read>(input: R) -> Result<Vec<BoundReport>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    check_header(&header, &BOUND_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != BOUND_HEADER.len() {
            return Err(parse_err(line, format!("expected 9 fields, got {}", rec.len())));
        }
        let int = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|e| parse_err(line, format!("bad integer '{s}': {e}")))
        };
        rows.push(BoundReport {
            family: rec[0].to_string(),
            n: int(&rec[1])?,
            lower_sq: parse_opt(&rec[2], line)?,
            lower_tag: rec[3].to_string(),
            measured: parse_opt(&rec[4], line)?,
            measured_remainder: parse_float(&rec[5], line)?,
            upper: parse_opt(&rec[6], line)?,
            params: parse_params(&rec[7], line)?,
            seed: int(&rec[8])?,
        });
    }
    Ok(rows)
}

/// A certificate as a row with only the lower columns filled.
pub fn certificate_row(family: &str, cert: &Certificate, seed: u64) -> BoundReport {
    BoundReport {
        family: family.to_string(),
        n: cert.n,
        lower_sq: Some(cert.bound_sq),
        lower_tag: cert.tag.to_string(),
        measured: None,
        measured_remainder: 0.0,
        upper: None,
        params: cert.params.clone(),
        seed,
    }
}

pub fn certificate_from_row(row: &BoundReport) -> Result<Certificate> {
    let bound_sq = row
        .lower_sq
        .ok_or_else(|| Error::InvalidArgument(format!("row n={} has no lower bound", row.n)))?;
    Ok(Certificate {
        n: row.n,
        bound_sq,
        tag: CertTag::from_str(&row.lower_tag)?,
        params: row.params.clone(),
    })
}

/// One block of the infinite-trace composition.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockRow {
    pub j: u32,
    pub start: Count,
    pub end: Count,
    pub block_value: f64,
    pub composed: f64,
    pub tau_start: f64,
}

impl BlockRow {
    pub fn from_oracle(o: &BlockOracle, tau_start: f64) -> Self {
        BlockRow {
            j: o.j,
            start: o.start,
            end: o.n_j,
            block_value: o.lower_value,
            composed: 2f64.powf(-(o.j as f64) / 2.0) * o.lower_value,
            tau_start,
        }
    }
}

pub fn write_block_rows<W: Write>(out: W, rows: &[BlockRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv write: {e}"));
    w.write_record(BLOCK_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.j.to_string(),
            r.start.to_string(),
            r.end.to_string(),
            format_float(r.block_value),
            format_float(r.composed),
            format_float(r.tau_start),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv write: {e}")))
}

pub fn read_block_rows<R: Read>(input: R) -> Result<Vec<BlockRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    check_header(&header, &BLOCK_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != BLOCK_HEADER.len() {
            return Err(parse_err(line, format!("expected 6 fields, got {}", rec.len())));
        }
        let count = |s: &str| Count::from_str(s).map_err(|e| parse_err(line, e.to_string()));
        rows.push(BlockRow {
            j: rec[0]
                .parse()
                .map_err(|e| parse_err(line, format!("bad block index: {e}")))?,
            start: count(&rec[1])?,
            end: count(&rec[2])?,
            block_value: parse_float(&rec[3], line)?,
            composed: parse_float(&rec[4], line)?,
            tau_start: parse_float(&rec[5], line)?,
        });
    }
    Ok(rows)
}
