//! Step trace CSV: one row per accepted step, flushed as it is written, and
//! a block of `# key = value` summary lines at the end.

use crate::adaptivity::StepRecord;
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

pub const TRACE_HEADER: [&str; 16] = [
    "step",
    "t",
    "tau",
    "eta_S1",
    "eta_S2",
    "eta_S3",
    "eta_S4",
    "eta_T_tilde",
    "dofs",
    "newton_iters",
    "union_dofs",
    "cells",
    "refined",
    "coarsened",
    "halvings",
    "l2_error",
];

/// 17 significant digits, enough to parse back bitwise.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn record_fields(r: &StepRecord) -> [String; 16] {
    [
        r.step.to_string(),
        fmt_real(r.t),
        fmt_real(r.tau),
        fmt_real(r.eta_s1),
        fmt_real(r.eta_s2),
        fmt_real(r.eta_s3),
        fmt_real(r.eta_s4),
        fmt_real(r.eta_t_tilde),
        r.dofs.to_string(),
        r.newton_iters.to_string(),
        r.union_dofs.to_string(),
        r.cells.to_string(),
        r.refined.to_string(),
        r.coarsened.to_string(),
        r.halvings.to_string(),
        fmt_real(r.l2_error),
    ]
}

pub struct TraceWriter<W: Write> {
    out: W,
}

impl TraceWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        TraceWriter::new(BufWriter::new(File::create(path)?))
    }
}

/// One RFC 4180 line.
fn csv_line<I, T>(fields: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(fields)?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        out.write_all(&csv_line(TRACE_HEADER)?)?;
        out.flush()?;
        Ok(TraceWriter { out })
    }

    pub fn push(&mut self, r: &StepRecord) -> Result<()> {
        self.out.write_all(&csv_line(record_fields(r))?)?;
        self.out.flush()?;
        Ok(())
    }

    /// Appends `# key = value` lines.
    pub fn summary(&mut self, entries: &[(&str, String)]) -> Result<()> {
        for (k, v) in entries {
            writeln!(self.out, "# {k} = {v}")?;
        }
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        Ok(self.out)
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let s = rec.get(i).ok_or_else(|| Error::Parse(format!("missing column {}", TRACE_HEADER[i])))?;
    s.parse().map_err(|_| Error::Parse(format!("bad value '{s}' in column {}", TRACE_HEADER[i])))
}

/// Parses a trace written by [`TraceWriter`]: rows and summary entries.
pub fn read_trace<R: Read>(mut input: R) -> Result<(Vec<StepRecord>, BTreeMap<String, String>)> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut summary = BTreeMap::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once(" = ") {
                summary.insert(k.to_string(), v.to_string());
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    if rdr.headers()?.iter().ne(TRACE_HEADER) {
        return Err(Error::Parse("unexpected trace header".into()));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(StepRecord {
            step: field(&rec, 0)?,
            t: field(&rec, 1)?,
            tau: field(&rec, 2)?,
            eta_s1: field(&rec, 3)?,
            eta_s2: field(&rec, 4)?,
            eta_s3: field(&rec, 5)?,
            eta_s4: field(&rec, 6)?,
            eta_t_tilde: field(&rec, 7)?,
            dofs: field(&rec, 8)?,
            newton_iters: field(&rec, 9)?,
            union_dofs: field(&rec, 10)?,
            cells: field(&rec, 11)?,
            refined: field(&rec, 12)?,
            coarsened: field(&rec, 13)?,
            halvings: field(&rec, 14)?,
            l2_error: field(&rec, 15)?,
        });
    }
    Ok((out, summary))
}
