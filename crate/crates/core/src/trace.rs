//! Run traces and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact header of every trace CSV.
pub const CSV_HEADER: [&str; 10] = [
    "algorithm",
    "problem",
    "seed",
    "epoch",
    "iter",
    "h_calls",
    "f_calls",
    "sq_dist",
    "gap",
    "elapsed_ns",
];

/// Whether schedules read `‖z₀ - z*‖` from an attached optimum or from
/// caller-supplied bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Benchmark,
    BlackBox,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub algorithm: String,
    pub problem: String,
    pub seed: u64,
    pub config_hash: String,
    pub mode: RunMode,
}

/// One recorded iteration. `iter` counts iterations since the start of the
/// run, across epochs; `sq_dist` is measured at the method's output iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: u64,
    pub iter: u64,
    pub h_calls: u64,
    pub f_calls: u64,
    pub sq_dist: f64,
    pub gap: Option<f64>,
    pub elapsed_ns: u64,
}

impl TraceRow {
    /// Gradient queries spent so far, in full-field units.
    pub fn queries(&self) -> u64 {
        self.h_calls.max(self.f_calls)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub metadata: TraceMetadata,
    pub rows: Vec<TraceRow>,
}

fn fmt_f64(v: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format(v).to_owned()
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<T> {
    rec.get(idx)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::config(format!("trace line {line}: bad `{}` field", CSV_HEADER[idx])))
}

impl RunTrace {
    pub fn new(metadata: TraceMetadata) -> Self {
        Self {
            metadata,
            rows: Vec::new(),
        }
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Checks that call counters never decrease and every distance is finite
    /// (or NaN throughout, for runs without a reference point).
    pub fn validate(&self) -> Result<()> {
        let no_ref = self.rows.iter().all(|r| r.sq_dist.is_nan());
        for w in self.rows.windows(2) {
            if w[1].h_calls < w[0].h_calls || w[1].f_calls < w[0].f_calls || w[1].iter <= w[0].iter {
                return Err(Error::invalid(format!(
                    "trace counters go backwards at iteration {}",
                    w[1].iter
                )));
            }
        }
        if !no_ref {
            if let Some(r) = self.rows.iter().find(|r| !r.sq_dist.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite distance recorded at iteration {}",
                    r.iter
                )));
            }
        }
        Ok(())
    }

    /// Appends the trace's rows (no header) to `w`.
    pub fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let seed = self.metadata.seed.to_string();
        for r in &self.rows {
            w.write_record([
                self.metadata.algorithm.as_str(),
                self.metadata.problem.as_str(),
                seed.as_str(),
                &r.epoch.to_string(),
                &r.iter.to_string(),
                &r.h_calls.to_string(),
                &r.f_calls.to_string(),
                &fmt_f64(r.sq_dist),
                &r.gap.map(fmt_f64).unwrap_or_default(),
                &r.elapsed_ns.to_string(),
            ])?;
        }
        Ok(())
    }

    /// Full CSV document with header.
    pub fn to_csv_string(&self) -> Result<String> {
        write_csv(std::slice::from_ref(self))
    }
}

pub fn csv_writer<W: Write>(inner: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(inner)
}

/// Writes several traces into one CSV document.
pub fn write_csv(traces: &[RunTrace]) -> Result<String> {
    let mut w = csv_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for t in traces {
        t.write_rows(&mut w)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses a trace CSV back into traces, one per `(algorithm, problem, seed)`
/// in order of first appearance. Metadata not stored in the CSV is left at
/// its default.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<RunTrace>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::config("trace CSV header does not match the expected schema"));
    }
    let mut out: Vec<RunTrace> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let algorithm = rec.get(0).unwrap_or_default().to_owned();
        let problem = rec.get(1).unwrap_or_default().to_owned();
        let seed: u64 = parse_field(&rec, 2, line)?;
        let gap = match rec.get(8) {
            Some("") | None => None,
            Some(_) => Some(parse_field::<f64>(&rec, 8, line)?),
        };
        let row = TraceRow {
            epoch: parse_field(&rec, 3, line)?,
            iter: parse_field(&rec, 4, line)?,
            h_calls: parse_field(&rec, 5, line)?,
            f_calls: parse_field(&rec, 6, line)?,
            sq_dist: parse_field(&rec, 7, line)?,
            gap,
            elapsed_ns: parse_field(&rec, 9, line)?,
        };
        let slot = out.iter_mut().find(|t| {
            t.metadata.algorithm == algorithm && t.metadata.problem == problem && t.metadata.seed == seed
        });
        match slot {
            Some(t) => t.rows.push(row),
            None => out.push(RunTrace {
                metadata: TraceMetadata {
                    algorithm,
                    problem,
                    seed,
                    ..TraceMetadata::default()
                },
                rows: vec![row],
            }),
        }
    }
    Ok(out)
}
