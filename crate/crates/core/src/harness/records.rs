//! Run records and the CSV formats read back by the CLI.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{DecayRow, FunctionalRecord};

pub const RECORDS_HEADER: [&str; 6] = ["star", "level", "n", "epsilon", "replicate", "value"];
pub const DECAY_HEADER: [&str; 4] = ["distance", "mean_abs", "mean_pow", "se"];

/// Everything computed from one replicate at one box size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub replicate: u64,
    pub n: f64,
    pub values: Vec<FunctionalRecord>,
    pub wall_seconds: f64,
    pub version: String,
}

pub fn write_records<W: Write>(out: W, records: &[FunctionalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORDS_HEADER)?;
    for r in records {
        w.write_record([
            r.star.as_str().to_string(),
            r.level.to_string(),
            r.n.to_string(),
            r.epsilon.to_string(),
            r.replicate.to_string(),
            r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn check_header(reader: &mut csv::Reader<impl Read>, want: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    if header.iter().ne(want.iter().copied()) {
        return Err(Error::Parse(format!(
            "expected header {:?}, found {:?}",
            want.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    line: u64,
    name: &str,
) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {line}: bad {name}")))
}

fn finite(x: f64, line: u64, name: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Parse(format!("line {line}: {name} is not finite")))
    }
}

/// Parses a functional records CSV.
pub fn read_records<R: Read>(input: R) -> Result<Vec<FunctionalRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    check_header(&mut reader, &RECORDS_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != RECORDS_HEADER.len() {
            return Err(Error::Parse(format!("line {line}: expected 6 fields")));
        }
        let star = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: unknown functional {:?}", &rec[0])))?;
        let n = finite(field(&rec, 2, line, "n")?, line, "n")?;
        if n <= 0.0 {
            return Err(Error::Parse(format!("line {line}: n must be positive")));
        }
        out.push(FunctionalRecord {
            star,
            level: finite(field(&rec, 1, line, "level")?, line, "level")?,
            n,
            epsilon: finite(field(&rec, 3, line, "epsilon")?, line, "epsilon")?,
            replicate: field(&rec, 4, line, "replicate")?,
            value: finite(field(&rec, 5, line, "value")?, line, "value")?,
        });
    }
    Ok(out)
}

pub fn write_decay_table<W: Write>(out: W, rows: &[DecayRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DECAY_HEADER)?;
    for r in rows {
        w.write_record([
            r.distance.to_string(),
            r.mean_abs.to_string(),
            r.mean_pow.to_string(),
            r.se.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a decay CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub distance: f64,
    pub mean_abs: f64,
    pub mean_pow: f64,
    pub se: f64,
}

pub fn read_decay_table<R: Read>(input: R) -> Result<Vec<DecayPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    check_header(&mut reader, &DECAY_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != DECAY_HEADER.len() {
            return Err(Error::Parse(format!("line {line}: expected 4 fields")));
        }
        let mut v = [0.0; 4];
        for (i, name) in DECAY_HEADER.iter().enumerate() {
            v[i] = finite(field(&rec, i, line, name)?, line, name)?;
            if v[i] < 0.0 {
                return Err(Error::Parse(format!("line {line}: {name} is negative")));
            }
        }
        out.push(DecayPoint {
            distance: v[0],
            mean_abs: v[1],
            mean_pow: v[2],
            se: v[3],
        });
    }
    Ok(out)
}
