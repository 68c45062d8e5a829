//! Tick CSV input and output (`time,price`).

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use asve_core::timescheme::RawTickData;
use asve_core::AsveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// Fewer valid rows than this is an error.
    pub min_rows: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { min_rows: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub raw: RawTickData,
    /// Rows with a NaN or non-positive price.
    pub dropped: usize,
    /// Rows replaced by a later row with the same timestamp.
    pub collapsed: usize,
}

impl Ingested {
    /// Log-price reference: the first valid price.
    pub fn log_ref(&self) -> f64 {
        self.raw.prices()[0]
    }
}

pub fn ingest(path: &Path, opts: &IngestOptions) -> Result<Ingested> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    ingest_reader(file, opts).with_context(|| format!("reading {}", path.display()))
}

pub fn ingest_reader<R: Read>(reader: R, opts: &IngestOptions) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().context("missing header")?.clone();
    if headers.len() != 2 || &headers[0] != "time" || &headers[1] != "price" {
        bail!("expected header `time,price`, found `{}`", headers.iter().collect::<Vec<_>>().join(","));
    }
    let (mut times, mut prices) = (Vec::new(), Vec::new());
    let (mut dropped, mut collapsed) = (0, 0);
    let mut last_seen = f64::NEG_INFINITY;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            bail!("line {line}: expected 2 fields, found {}", record.len());
        }
        let time: f64 = record[0].parse().with_context(|| format!("line {line}: bad time `{}`", &record[0]))?;
        let price: f64 = record[1].parse().with_context(|| format!("line {line}: bad price `{}`", &record[1]))?;
        if !time.is_finite() {
            bail!("line {line}: non-finite time");
        }
        if time < last_seen {
            bail!("line {line}: time {time} goes backwards");
        }
        last_seen = time;
        if !(price > 0.0) || !price.is_finite() {
            dropped += 1;
            continue;
        }
        if times.last() == Some(&time) {
            *prices.last_mut().expect("parallel vectors") = price;
            collapsed += 1;
        } else {
            times.push(time);
            prices.push(price);
        }
    }
    if times.len() < opts.min_rows.max(1) {
        return Err(AsveError::TooFewObservations {
            need: opts.min_rows.max(1),
            got: times.len(),
        }
        .into());
    }
    Ok(Ingested {
        raw: RawTickData::new(times, prices)?,
        dropped,
        collapsed,
    })
}

pub fn write_ticks<W: Write>(out: W, times: &[f64], prices: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "price"])?;
    for (t, p) in times.iter().zip(prices) {
        w.write_record([t.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
