//! CSV ingestion and export.
//!
//! Dataset files have a header row. One column is the response, chosen by
//! name or 0-based index; every other column is a predictor, in file order.
//! Parse errors report 1-based file rows (the header is row 1) and 1-based
//! columns.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Dataset, Hyperparameters};
use crate::sampler::ChainTrace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    Index(usize),
}

impl ResponseColumn {
    /// Numeric strings select by index, anything else by name.
    pub fn parse(arg: &str) -> Self {
        match arg.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(arg.to_string()),
        }
    }
}

impl Default for ResponseColumn {
    fn default() -> Self {
        ResponseColumn::Name("y".into())
    }
}

pub fn read_dataset<R: Read>(reader: R, response: &ResponseColumn) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(Ok(h)) if h.iter().any(|c| !c.is_empty()) => h,
        Some(Err(e)) => return Err(Error::Format(e.to_string())),
        _ => return Err(Error::Format("missing header row".into())),
    };
    let columns: Vec<String> = header.iter().map(str::to_string).collect();
    let response_idx = match response {
        ResponseColumn::Index(i) if *i < columns.len() => *i,
        ResponseColumn::Index(i) => {
            return Err(Error::Format(format!(
                "response index {i} out of range for {} columns",
                columns.len()
            )))
        }
        ResponseColumn::Name(name) => columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Format(format!("no column named {name:?}")))?,
    };

    let mut x_rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Format(format!("row {row}: {e}")))?;
        if rec.len() != columns.len() {
            return Err(Error::Parse {
                row,
                column: rec.len().min(columns.len()) + 1,
                message: format!("expected {} fields, found {}", columns.len(), rec.len()),
            });
        }
        let mut xs = Vec::with_capacity(columns.len() - 1);
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column: c + 1,
                message: format!("{field:?} is not a number"),
            })?;
            if c == response_idx {
                y.push(v);
            } else {
                xs.push(v);
            }
        }
        x_rows.push(xs);
    }
    if x_rows.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    let p = columns.len() - 1;
    if p == 0 {
        return Err(Error::Format("no predictor columns".into()));
    }
    let names: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != response_idx)
        .map(|(_, n)| n.clone())
        .collect();
    let x = DMatrix::from_fn(x_rows.len(), p, |i, j| x_rows[i][j]);
    Dataset::new(x, DVector::from_vec(y), Some(names))
}

pub fn read_dataset_file(path: &Path, response: &ResponseColumn) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, response)
}

/// Writes predictors in order followed by a response column named `y`.
pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.names().iter().map(String::as_str).collect();
    header.push("y");
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..dataset.n() {
        let mut row: Vec<String> = dataset.x().row(i).iter().map(|v| v.to_string()).collect();
        row.push(dataset.y()[i].to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

pub fn write_dataset_file(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(dataset, file)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Trace CSV: `iter, beta_1..beta_p, g_1..g_p, kappa, sigma2, accepted`.
pub fn write_trace<W: Write>(trace: &ChainTrace, writer: W) -> Result<()> {
    let p = trace.p();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["iter".to_string()];
    header.extend((1..=p).map(|j| format!("beta_{j}")));
    header.extend((1..=p).map(|j| format!("g_{j}")));
    header.extend(["kappa", "sigma2", "accepted"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for t in 0..trace.len() {
        let mut row = Vec::with_capacity(2 * p + 4);
        row.push(trace.iter[t].to_string());
        row.extend(trace.beta_row(t).iter().map(|v| v.to_string()));
        row.extend(trace.g_row(t).iter().map(|v| v.to_string()));
        row.push(trace.kappa[t].to_string());
        row.push(trace.sigma2[t].to_string());
        row.push((trace.accepted[t] as u8).to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

/// Reads a trace written by [`write_trace`]. Burn-in and seed are not part
/// of the CSV and must be supplied.
pub fn read_trace<R: Read>(reader: R, seed: u64, burn_in: usize) -> Result<ChainTrace> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let cols = headers.len();
    if cols < 6 || (cols - 4) % 2 != 0 || &headers[0] != "iter" {
        return Err(Error::Format(format!(
            "unexpected trace header with {cols} columns"
        )));
    }
    let p = (cols - 4) / 2;
    let mut trace = ChainTrace::with_capacity(p, 0, seed, 0, burn_in);
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Format(format!("row {row}: {e}")))?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: c + 1,
                    message: "expected a number".into(),
                })
        };
        let iter = num(0)? as usize;
        let beta = DVector::from_iterator(p, (1..=p).map(num).collect::<Result<Vec<_>>>()?);
        let g = DVector::from_iterator(p, (p + 1..=2 * p).map(num).collect::<Result<Vec<_>>>()?);
        let state = crate::model::ModelState {
            beta,
            g,
            kappa: num(2 * p + 1)?,
            sigma2: num(2 * p + 2)?,
        };
        let accepted = num(2 * p + 3)? != 0.0;
        trace.push(iter, &state, accepted);
    }
    Ok(trace)
}

/// Sidecar metadata written next to a trace CSV.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceHeader {
    pub seed: u64,
    pub chain: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub hyperparameters: Hyperparameters,
}

/// Writes `path` (CSV) and `path` with a `.json` extension (header).
pub fn write_trace_files(trace: &ChainTrace, header: &TraceHeader, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace(trace, file)?;
    let meta_path = path.with_extension("json");
    let json = serde_json::to_string_pretty(header).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))
}
