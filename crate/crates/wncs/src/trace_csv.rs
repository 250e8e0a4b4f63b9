//! Trace CSV: one row per controller sample, LF line endings, plain decimal
//! numbers.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use wncs_core::estimator::Rule;
use wncs_core::sim::{SimTrace, TraceRecord};

pub const HEADER: [&str; 12] =
    ["t", "r", "y", "y_d", "td_ms", "tm_ms", "rule", "e1", "e2", "y_asp", "drive", "duty_pct"];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{0}")]
    Format(csv::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: bad value {value:?} in column {column}")]
    Field { row: usize, column: &'static str, value: String },
}

impl From<csv::Error> for CsvError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => CsvError::Io(io),
                _ => unreachable!(),
            }
        } else {
            CsvError::Format(e)
        }
    }
}

pub fn write_trace<W: Write>(trace: &SimTrace, out: W) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.t.to_string(),
            r.r.to_string(),
            r.y.to_string(),
            r.y_d.to_string(),
            r.td_ms.to_string(),
            r.tm_ms.to_string(),
            r.rule.as_str().to_string(),
            r.e1.to_string(),
            r.e2.to_string(),
            r.y_asp.to_string(),
            r.drive.to_string(),
            r.duty_pct.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(trace: &SimTrace, path: &Path) -> Result<(), CsvError> {
    let mut file = BufWriter::new(File::create(path)?);
    write_trace(trace, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<SimTrace, CsvError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(CsvError::Header(header));
    }
    let mut records = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let text = |k: usize| rec.get(k).unwrap_or("");
        let bad = |k: usize| CsvError::Field { row: row + 1, column: HEADER[k], value: text(k).to_string() };
        let num = |k: usize| text(k).parse::<f64>().map_err(|_| bad(k));
        let int = |k: usize| text(k).parse::<u64>().map_err(|_| bad(k));
        records.push(TraceRecord {
            t: num(0)?,
            r: num(1)?,
            y: num(2)?,
            y_d: num(3)?,
            td_ms: int(4)?,
            tm_ms: int(5)?,
            rule: text(6).parse::<Rule>().map_err(|_| bad(6))?,
            e1: num(7)?,
            e2: num(8)?,
            y_asp: num(9)?,
            drive: num(10)?,
            duty_pct: num(11)?,
        });
    }
    Ok(SimTrace { records })
}

pub fn parse_csv(path: &Path) -> Result<SimTrace, CsvError> {
    read_trace(File::open(path)?)
}
